"""CNN architecture description, weight-vector packing, and the forward pass.

The trainable state of a network is a single flat float32 vector (the
genome).  Its layout is fixed so checkpoints stay portable: convolution
layers in network order (kernels in [out, in, row, col] index order, then
biases), then the affine layers in order (weights row-major, then biases),
ending with the classifier.  The last convolution output is flattened in
row-major [channel, row, col] order before the first affine layer.

Hidden affine layers are followed by ReLU like the convolutions; the
classifier output is raw scores with no normalization of any kind.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng
from .errors import ConfigError, ShapeError
from .tensor import Conv2dParams, LinearParams, Tensor

_KERNEL_SIZE = 3


@dataclass(frozen=True)
class ConvLayerSpec:
    out_channels: int
    kernel: int = _KERNEL_SIZE
    stride: int = 2
    padding: int = 1

    def __post_init__(self):
        if self.out_channels < 1:
            raise ConfigError(f"out_channels must be >= 1, got {self.out_channels}")
        if self.kernel != _KERNEL_SIZE:
            raise ConfigError(
                f"conv layers use {_KERNEL_SIZE}x{_KERNEL_SIZE} kernels, "
                f"got kernel={self.kernel}"
            )
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ConfigError(f"padding must be >= 0, got {self.padding}")


@dataclass(frozen=True)
class ArchitectureSpec:
    """Declarative CNN layout: conv stack, affine stack, classifier."""

    input_shape: tuple
    conv_layers: tuple
    fc_sizes: tuple
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "conv_layers", tuple(self.conv_layers))
        object.__setattr__(self, "fc_sizes", tuple(int(s) for s in self.fc_sizes))
        if len(self.input_shape) != 3 or any(d < 1 for d in self.input_shape):
            raise ConfigError(
                f"input_shape must be [channels, height, width] with positive "
                f"dims, got {list(self.input_shape)}"
            )
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if any(s < 1 for s in self.fc_sizes):
            raise ConfigError(f"fc_sizes must all be >= 1, got {list(self.fc_sizes)}")
        # Walking the conv stack validates every intermediate spatial size.
        self.conv_output_shapes()

    def conv_output_shapes(self) -> list:
        """[channels, height, width] after each conv layer, validated >= 1."""
        channels, height, width = self.input_shape
        shapes = []
        for i, layer in enumerate(self.conv_layers):
            height = kernels.conv_output_size(
                height, layer.kernel, layer.stride, layer.padding
            )
            width = kernels.conv_output_size(
                width, layer.kernel, layer.stride, layer.padding
            )
            if height < 1 or width < 1:
                raise ConfigError(
                    f"conv layer {i} produces an empty {height}x{width} output"
                )
            channels = layer.out_channels
            shapes.append((channels, height, width))
        return shapes

    @property
    def flat_features(self) -> int:
        """Length of the flattened vector entering the first affine layer."""
        shapes = self.conv_output_shapes()
        last = shapes[-1] if shapes else self.input_shape
        return math.prod(last)

    def to_json_dict(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "conv_layers": [
                {
                    "out_channels": c.out_channels,
                    "kernel": c.kernel,
                    "stride": c.stride,
                    "padding": c.padding,
                }
                for c in self.conv_layers
            ],
            "fc_sizes": list(self.fc_sizes),
            "num_classes": self.num_classes,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ArchitectureSpec":
        required = {"input_shape", "conv_layers", "fc_sizes", "num_classes"}
        unknown = set(doc) - required
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", path="arch")
        missing = required - set(doc)
        if missing:
            raise ConfigError(f"missing keys {sorted(missing)}", path="arch")
        conv_layers = []
        for i, c in enumerate(doc["conv_layers"]):
            extra = set(c) - {"out_channels", "kernel", "stride", "padding"}
            if extra:
                raise ConfigError(
                    f"unknown keys {sorted(extra)}", path=f"arch.conv_layers[{i}]"
                )
            conv_layers.append(ConvLayerSpec(**c))
        return cls(
            input_shape=tuple(doc["input_shape"]),
            conv_layers=tuple(conv_layers),
            fc_sizes=tuple(doc["fc_sizes"]),
            num_classes=int(doc["num_classes"]),
        )

    def fingerprint(self) -> str:
        """Content hash tying genomes and checkpoints to this layout."""
        canonical = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("ascii")).hexdigest()[:16]

    @classmethod
    def default(cls) -> "ArchitectureSpec":
        """Desk-scale default: 1x32x32 in, four 32-channel stride-2 convs,
        affine stack 512/256/128, four classes."""
        return cls(
            input_shape=(1, 32, 32),
            conv_layers=tuple(
                ConvLayerSpec(out_channels=32, stride=2, padding=1) for _ in range(4)
            ),
            fc_sizes=(512, 256, 128),
            num_classes=4,
        )


@dataclass(frozen=True)
class _Segment:
    """One contiguous slice of the genome: a weight block or a bias block."""

    name: str
    offset: int
    shape: tuple
    is_bias: bool
    fan_in: int
    fan_out: int

    @property
    def size(self) -> int:
        return math.prod(self.shape)


def layout(spec: ArchitectureSpec) -> list:
    """Ordered genome segments for a spec (conv layers, then affine layers)."""
    segments = []
    offset = 0

    def add(name, shape, is_bias, fan_in, fan_out):
        nonlocal offset
        seg = _Segment(name, offset, tuple(shape), is_bias, fan_in, fan_out)
        segments.append(seg)
        offset += seg.size

    in_channels = spec.input_shape[0]
    for i, conv in enumerate(spec.conv_layers):
        k = conv.kernel
        fan_in = k * k * in_channels
        fan_out = k * k * conv.out_channels
        add(f"conv{i}.kernels", (conv.out_channels, in_channels, k, k), False, fan_in, fan_out)
        add(f"conv{i}.biases", (conv.out_channels,), True, fan_in, fan_out)
        in_channels = conv.out_channels

    features = spec.flat_features
    for i, width in enumerate(spec.fc_sizes):
        add(f"fc{i}.weights", (width, features), False, features, width)
        add(f"fc{i}.biases", (width,), True, features, width)
        features = width
    add("classifier.weights", (spec.num_classes, features), False, features, spec.num_classes)
    add("classifier.biases", (spec.num_classes,), True, features, spec.num_classes)
    return segments


def param_count(spec: ArchitectureSpec) -> int:
    """Total number of trainable values (genome length)."""
    return sum(seg.size for seg in layout(spec))


@dataclass(frozen=True, eq=False)
class Genome:
    """Flat float32 parameter vector plus the fingerprint of its layout."""

    values: np.ndarray
    spec_fingerprint: str

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32).reshape(-1)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CnnModel:
    """Structured view of a genome: per-layer parameter bundles."""

    spec: ArchitectureSpec
    conv_params: tuple
    fc_params: tuple  # hidden affine layers, then the classifier last

    @property
    def classifier(self) -> LinearParams:
        return self.fc_params[-1]


def _check_genome(genome: Genome, spec: ArchitectureSpec) -> None:
    expected = param_count(spec)
    if len(genome) != expected:
        raise ShapeError(
            f"genome length {len(genome)} does not match spec parameter "
            f"count {expected}"
        )
    if genome.spec_fingerprint != spec.fingerprint():
        raise ShapeError(
            f"genome fingerprint {genome.spec_fingerprint} does not match "
            f"spec fingerprint {spec.fingerprint()}"
        )


def _segment_views(genome: Genome, spec: ArchitectureSpec) -> dict:
    _check_genome(genome, spec)
    return {
        seg.name: genome.values[seg.offset : seg.offset + seg.size].reshape(seg.shape)
        for seg in layout(spec)
    }


def unpack(genome: Genome, spec: ArchitectureSpec) -> CnnModel:
    """Build per-layer parameter bundles viewing the genome's storage."""
    views = _segment_views(genome, spec)
    conv_params = tuple(
        Conv2dParams(
            kernels=Tensor._wrap(views[f"conv{i}.kernels"]),
            biases=Tensor._wrap(views[f"conv{i}.biases"]),
            stride=conv.stride,
            padding=conv.padding,
        )
        for i, conv in enumerate(spec.conv_layers)
    )
    fc_params = tuple(
        LinearParams(
            weights=Tensor._wrap(views[f"fc{i}.weights"]),
            biases=Tensor._wrap(views[f"fc{i}.biases"]),
        )
        for i in range(len(spec.fc_sizes))
    ) + (
        LinearParams(
            weights=Tensor._wrap(views["classifier.weights"]),
            biases=Tensor._wrap(views["classifier.biases"]),
        ),
    )
    return CnnModel(spec=spec, conv_params=conv_params, fc_params=fc_params)


def pack(model: CnnModel) -> Genome:
    """Flatten a model back into a genome (inverse of unpack, bitwise)."""
    parts = []
    for conv in model.conv_params:
        parts.append(conv.kernels.data)
        parts.append(conv.biases.data)
    for fc in model.fc_params:
        parts.append(fc.weights.data)
        parts.append(fc.biases.data)
    values = np.concatenate(parts) if parts else np.empty(0, dtype=np.float32)
    return Genome(values=values, spec_fingerprint=model.spec.fingerprint())


def glorot_init(spec: ArchitectureSpec, seed: int) -> Genome:
    """Glorot-uniform weights, zero biases, deterministic in the seed.

    Each weight block w is drawn uniformly from
    [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))); conv fans count
    the full kernel patch (kernel*kernel*channels).  Every block gets its
    own stream derived from (seed, block index), so layouts that share a
    prefix still differ downstream.
    """
    values = np.empty(param_count(spec), dtype=np.float32)
    for index, seg in enumerate(layout(spec)):
        block = values[seg.offset : seg.offset + seg.size]
        if seg.is_bias:
            block[:] = 0.0
        else:
            bound = math.sqrt(6.0 / (seg.fan_in + seg.fan_out))
            stream = rng.SplitMix64(rng.derive_seed(seed, index))
            block[:] = stream.uniform_signed(seg.size, bound).astype(np.float32)
    return Genome(values=values, spec_fingerprint=spec.fingerprint())


def forward_batch(genome: Genome, spec: ArchitectureSpec, images: np.ndarray) -> np.ndarray:
    """Score a batch: [N, C, H, W] float32 -> [N, num_classes] float32.

    This is the hot path; it works on raw arrays and the selected kernel
    backend.  `forward` wraps it for single images.
    """
    views = _segment_views(genome, spec)
    if images.ndim != 4 or tuple(images.shape[1:]) != spec.input_shape:
        raise ShapeError(
            f"image batch shape {tuple(images.shape)} does not match input "
            f"shape {spec.input_shape}"
        )
    x = np.ascontiguousarray(images, dtype=np.float32)
    zero = np.float32(0.0)
    for i, conv in enumerate(spec.conv_layers):
        x = kernels.conv2d(
            x,
            views[f"conv{i}.kernels"],
            views[f"conv{i}.biases"],
            conv.stride,
            conv.padding,
        )
        x = np.maximum(x, zero)
    x = x.reshape(x.shape[0], -1)
    for i in range(len(spec.fc_sizes)):
        x = kernels.linear(x, views[f"fc{i}.weights"], views[f"fc{i}.biases"])
        x = np.maximum(x, zero)
    return kernels.linear(x, views["classifier.weights"], views["classifier.biases"])


def forward(genome: Genome, spec: ArchitectureSpec, image: Tensor) -> Tensor:
    """Raw class scores for one image of shape spec.input_shape."""
    if image.shape != spec.input_shape:
        raise ShapeError(
            f"image shape {image.shape} does not match spec input shape "
            f"{spec.input_shape}"
        )
    scores = forward_batch(genome, spec, image.array[np.newaxis])
    return Tensor._wrap(scores[0])
