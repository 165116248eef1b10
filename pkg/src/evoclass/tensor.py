"""Minimal forward-only tensor kernel.

A Tensor is a dense float32 array with an explicit shape; the three layer
operations a mutation-trained classifier needs are 2-D convolution
(cross-correlation, zero padding), ReLU, and an affine map.  There are no
gradients, no pooling, and no output normalization anywhere in this
package: class scores come straight out of the last affine layer.

All values are immutable after construction, so tensors and parameter
bundles can be shared freely across evaluation threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ShapeError


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


class Tensor:
    """Dense rank-N array of 32-bit floats with an explicit shape.

    Data is stored flat in row-major order; its length always equals the
    product of the shape.  Instances are immutable: reshape returns a new
    view over the same data.
    """

    __slots__ = ("_array",)

    def __init__(self, shape, data):
        shape = tuple(int(d) for d in shape)
        if any(d <= 0 for d in shape):
            raise ShapeError(f"tensor shape {shape} has a non-positive dimension")
        flat = np.asarray(data, dtype=np.float32).reshape(-1)
        expected = math.prod(shape)
        if flat.size != expected:
            raise ShapeError(
                f"tensor data length {flat.size} does not match shape {shape} "
                f"(expected {expected})"
            )
        self._array = _freeze(flat.reshape(shape).copy())

    @classmethod
    def from_array(cls, array) -> "Tensor":
        array = np.asarray(array, dtype=np.float32)
        return cls(array.shape, array.reshape(-1))

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        """Adopt a float32 array without copying (internal fast path)."""
        tensor = object.__new__(cls)
        tensor._array = _freeze(np.ascontiguousarray(array, dtype=np.float32))
        return tensor

    @property
    def shape(self) -> tuple:
        return self._array.shape

    @property
    def data(self) -> np.ndarray:
        """Flat row-major float32 view of the values (read-only)."""
        return self._array.reshape(-1)

    @property
    def array(self) -> np.ndarray:
        """Shaped read-only float32 view of the values."""
        return self._array

    @property
    def size(self) -> int:
        return self._array.size

    def reshape(self, shape) -> "Tensor":
        shape = tuple(int(d) for d in shape)
        if math.prod(shape) != self.size:
            raise ShapeError(
                f"cannot reshape {self.size} values into shape {shape}"
            )
        return Tensor._wrap(self._array.reshape(shape))

    def item(self, *index) -> float:
        return float(self._array[index])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


@dataclass(frozen=True)
class Conv2dParams:
    """One convolution layer: kernels [O,C,KH,KW], biases [O], stride, padding."""

    kernels: Tensor
    biases: Tensor
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if len(self.kernels.shape) != 4:
            raise ShapeError(
                f"conv kernels must be rank 4 [out,in,kh,kw], got {self.kernels.shape}"
            )
        if self.biases.shape != (self.kernels.shape[0],):
            raise ShapeError(
                f"conv biases shape {self.biases.shape} does not match "
                f"{self.kernels.shape[0]} output channels"
            )
        if self.stride < 1:
            raise ShapeError(f"conv stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ShapeError(f"conv padding must be >= 0, got {self.padding}")

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[1]


@dataclass(frozen=True)
class LinearParams:
    """One affine layer: weights [OUT,IN], biases [OUT]."""

    weights: Tensor
    biases: Tensor

    def __post_init__(self):
        if len(self.weights.shape) != 2:
            raise ShapeError(
                f"linear weights must be rank 2 [out,in], got {self.weights.shape}"
            )
        if self.weights.shape[0] < 1:
            raise ShapeError("linear layer needs at least one output feature")
        if self.biases.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"linear biases shape {self.biases.shape} does not match "
                f"{self.weights.shape[0]} output features"
            )

    @property
    def out_features(self) -> int:
        return self.weights.shape[0]

    @property
    def in_features(self) -> int:
        return self.weights.shape[1]


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Spatial output extent: floor((size + 2*padding - kernel)/stride) + 1."""
    return kernels.conv_output_size(size, kernel, stride, padding)


def conv2d_forward(input: Tensor, params: Conv2dParams) -> Tensor:
    """Convolve one image [C,H,W] -> [O,H',W']."""
    if len(input.shape) != 3:
        raise ShapeError(f"conv input must be rank 3 [C,H,W], got {input.shape}")
    if input.shape[0] != params.in_channels:
        raise ShapeError(
            f"conv input has {input.shape[0]} channels but kernels expect "
            f"{params.in_channels}"
        )
    out = kernels.conv2d(
        input.array[np.newaxis],
        params.kernels.array,
        params.biases.array,
        params.stride,
        params.padding,
    )
    return Tensor._wrap(out[0])


def relu(input: Tensor) -> Tensor:
    """Elementwise max(0, x)."""
    return Tensor._wrap(np.maximum(input.array, np.float32(0.0)))


def linear_forward(input: Tensor, params: LinearParams) -> Tensor:
    """Affine map of a feature vector [IN] -> [OUT]."""
    if len(input.shape) != 1:
        raise ShapeError(f"linear input must be rank 1, got {input.shape}")
    if input.shape[0] != params.in_features:
        raise ShapeError(
            f"linear input has {input.shape[0]} features but weights expect "
            f"{params.in_features}"
        )
    out = kernels.linear(
        input.array[np.newaxis], params.weights.array, params.biases.array
    )
    return Tensor._wrap(out[0])


def argmax(input: Tensor) -> int:
    """Index of the maximum value; ties resolve to the lowest index."""
    if input.size == 0:
        raise ShapeError("argmax of an empty tensor")
    if len(input.shape) != 1:
        raise ShapeError(f"argmax input must be rank 1, got {input.shape}")
    return int(np.argmax(input.array))
