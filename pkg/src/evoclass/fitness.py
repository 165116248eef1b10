"""Training reward and accuracy evaluation.

A genome's fitness on a labeled split is the count of images whose argmax
class score matches the label: one point per correct image, nothing else.
The optimizer only ever consumes the rank order of these integer rewards,
so no smoothed or margin-based variant exists here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .errors import DataError, ShapeError
from .tensor import Tensor


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Ordered (image, class index) pairs for one split."""

    images: tuple
    labels: tuple
    split_name: str

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise DataError(
                f"split {self.split_name!r}: {len(self.images)} images but "
                f"{len(self.labels)} labels"
            )
        if len(self.images) == 0:
            raise DataError(f"empty split: {self.split_name}")
        shape = self.images[0].shape
        for i, image in enumerate(self.images):
            if image.shape != shape:
                raise DataError(
                    f"split {self.split_name!r} image {i} has shape "
                    f"{image.shape}, expected {shape}"
                )
        for i, label in enumerate(self.labels):
            if label < 0:
                raise DataError(
                    f"split {self.split_name!r} label {i} is negative"
                )
        stacked = np.stack([image.array for image in self.images])
        stacked.flags.writeable = False
        object.__setattr__(self, "_stacked", stacked)
        object.__setattr__(
            self, "_label_array", np.asarray(self.labels, dtype=np.int64)
        )

    def __len__(self) -> int:
        return len(self.images)

    @property
    def image_shape(self) -> tuple:
        return self.images[0].shape

    @property
    def stacked(self) -> np.ndarray:
        """All images as one [N, ...] float32 array (read-only)."""
        return self._stacked

    @property
    def label_array(self) -> np.ndarray:
        return self._label_array

    @classmethod
    def from_arrays(cls, images: np.ndarray, labels, split_name: str) -> "LabeledDataset":
        return cls(
            images=tuple(Tensor.from_array(img) for img in images),
            labels=tuple(int(l) for l in labels),
            split_name=split_name,
        )


@dataclass(frozen=True)
class FitnessResult:
    """Integer reward (count correct) out of ``total`` images."""

    reward: int
    total: int
    per_class_correct: tuple

    def __post_init__(self):
        if not 0 <= self.reward <= self.total:
            raise ValueError(
                f"reward {self.reward} outside [0, {self.total}]"
            )
        if sum(self.per_class_correct) != self.reward:
            raise ValueError("per-class tallies do not sum to the reward")


def predictions(genome, spec, dataset: LabeledDataset) -> np.ndarray:
    """Predicted class index per image (argmax, ties to the lowest index)."""
    if dataset.image_shape != spec.input_shape:
        raise ShapeError(
            f"dataset images have shape {dataset.image_shape} but the spec "
            f"expects {spec.input_shape}"
        )
    scores = model.forward_batch(genome, spec, dataset.stacked)
    return np.argmax(scores, axis=1)


def evaluate_fitness(genome, spec, dataset: LabeledDataset) -> FitnessResult:
    """Count correctly classified images; per-class tallies for diagnostics."""
    labels = dataset.label_array
    if labels.max() >= spec.num_classes:
        raise DataError(
            f"split {dataset.split_name!r} has label {int(labels.max())} but "
            f"the spec declares {spec.num_classes} classes"
        )
    preds = predictions(genome, spec, dataset)
    correct = preds == labels
    per_class = np.bincount(labels[correct], minlength=spec.num_classes)
    return FitnessResult(
        reward=int(correct.sum()),
        total=len(dataset),
        per_class_correct=tuple(int(c) for c in per_class),
    )


def accuracy(result: FitnessResult) -> float:
    """Fraction correct in [0, 1]."""
    if result.total == 0:
        raise ValueError("accuracy undefined for an empty dataset")
    return result.reward / result.total


def confusion_matrix(genome, spec, dataset: LabeledDataset) -> np.ndarray:
    """[num_classes, num_classes] counts; rows = true class, cols = predicted."""
    preds = predictions(genome, spec, dataset)
    matrix = np.zeros((spec.num_classes, spec.num_classes), dtype=np.int64)
    np.add.at(matrix, (dataset.label_array, preds), 1)
    return matrix
