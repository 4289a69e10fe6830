"""Parameter containers for the feed-forward classifier and its building blocks."""

from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray

from app.exceptions import DegenerateInputException, DimensionMismatchException

FloatArray = NDArray[np.float64]


class Activation(StrEnum):
    """Hidden-layer nonlinearity."""
    RELU = "relu"
    TANH = "tanh"


def _frozen(array: NDArray[np.generic]) -> FloatArray:
    copy = np.array(array, dtype=np.float64, copy=True)
    copy.setflags(write=False)
    return copy


def _require_finite(name: str, array: FloatArray) -> None:
    if not np.all(np.isfinite(array)):
        raise DegenerateInputException(f"{name} contains non-finite values")


@dataclass(frozen=True, eq=False)
class DenseBlock:
    """A stack of fully connected layers.

    Weights are stored (fan_in, fan_out) so that ``x @ W + b`` maps a row of
    features. When ``activate_output`` is False the last layer is linear.
    A block without layers is the identity on ``input_dim`` features.
    """

    input_dim: int
    weights: tuple[FloatArray, ...]
    biases: tuple[FloatArray, ...]
    activation: Activation = Activation.RELU
    activate_output: bool = True

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases):
            raise DimensionMismatchException("block bias count", len(self.weights), len(self.biases))

        weights = tuple(_frozen(w) for w in self.weights)
        biases = tuple(_frozen(b) for b in self.biases)

        fan_in = self.input_dim
        for index, (weight, bias) in enumerate(zip(weights, biases, strict=True)):
            if weight.ndim != 2 or weight.shape[0] != fan_in:
                raise DimensionMismatchException(f"layer {index} fan-in", fan_in, weight.shape)
            if bias.shape != (weight.shape[1],):
                raise DimensionMismatchException(f"layer {index} bias", (weight.shape[1],), bias.shape)
            _require_finite(f"layer {index} weights", weight)
            _require_finite(f"layer {index} bias", bias)
            fan_in = weight.shape[1]

        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def output_dim(self) -> int:
        return int(self.weights[-1].shape[1]) if self.weights else self.input_dim

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        return [(int(w.shape[0]), int(w.shape[1])) for w in self.weights]

    def same_shape(self, other: "DenseBlock") -> bool:
        return self.input_dim == other.input_dim and self.layer_shapes == other.layer_shapes

    def combine(
        self,
        other: "DenseBlock",
        fn: Callable[[FloatArray, FloatArray], FloatArray],
    ) -> "DenseBlock":
        """Apply ``fn(mine, theirs)`` to every parameter pair of two same-shaped blocks."""
        if not self.same_shape(other):
            raise DimensionMismatchException("block shapes", tuple(self.layer_shapes), tuple(other.layer_shapes))
        return DenseBlock(
            input_dim=self.input_dim,
            weights=tuple(fn(a, b) for a, b in zip(self.weights, other.weights, strict=True)),
            biases=tuple(fn(a, b) for a, b in zip(self.biases, other.biases, strict=True)),
            activation=self.activation,
            activate_output=self.activate_output,
        )


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Classifier parameters: an encoder block followed by a linear head.

    The encoder output is the penultimate feature vector h (length p); the
    head weight matrix W is (p, C) and is the only parameter the gradient
    embedding looks at.
    """

    encoder: DenseBlock
    head_weight: FloatArray
    head_bias: FloatArray

    def __post_init__(self) -> None:
        head_weight = _frozen(self.head_weight)
        head_bias = _frozen(self.head_bias)
        if head_weight.ndim != 2 or head_weight.shape[0] != self.encoder.output_dim:
            raise DimensionMismatchException("head fan-in", self.encoder.output_dim, head_weight.shape)
        if head_bias.shape != (head_weight.shape[1],):
            raise DimensionMismatchException("head bias", (head_weight.shape[1],), head_bias.shape)
        _require_finite("head weights", head_weight)
        _require_finite("head bias", head_bias)
        object.__setattr__(self, "head_weight", head_weight)
        object.__setattr__(self, "head_bias", head_bias)

    @property
    def input_dim(self) -> int:
        return self.encoder.input_dim

    @property
    def num_classes(self) -> int:
        return int(self.head_weight.shape[1])

    @property
    def activation(self) -> Activation:
        return self.encoder.activation

    def with_head(self, head_weight: FloatArray, head_bias: FloatArray) -> "ModelParams":
        return ModelParams(encoder=self.encoder, head_weight=head_weight, head_bias=head_bias)


@dataclass(frozen=True)
class ForwardResult:
    """Penultimate activations, logits and sigmoid probabilities.

    Arrays are vectors for a single input and (N, ·) matrices for a batch.
    """

    penultimate: FloatArray
    logits: FloatArray
    probs: FloatArray


@dataclass(frozen=True, eq=False)
class GradientEmbedding:
    """Flattened last-layer loss gradient with its cached Euclidean norm."""

    values: FloatArray
    magnitude: float

    @classmethod
    def from_values(cls, values: FloatArray) -> "GradientEmbedding":
        flat = np.asarray(values, dtype=np.float64).reshape(-1)
        return cls(values=flat, magnitude=float(np.linalg.norm(flat)))
