"""Forward/backward kernels for dense blocks.

Inputs are always (batch, features) matrices; callers promote single
vectors with ``np.atleast_2d``.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from app.exceptions import DimensionMismatchException
from app.models.network import Activation, DenseBlock, FloatArray


@dataclass
class BlockCache:
    """Layer inputs and pre-activations recorded by block_forward."""

    inputs: list[FloatArray]
    pre_activations: list[FloatArray]


@dataclass
class BlockGradients:
    weights: list[FloatArray]
    biases: list[FloatArray]


def activate(z: FloatArray, activation: Activation) -> FloatArray:
    match activation:
        case Activation.RELU:
            return np.maximum(z, 0.0)
        case Activation.TANH:
            return np.tanh(z)


def activation_derivative(z: FloatArray, activation: Activation) -> FloatArray:
    match activation:
        case Activation.RELU:
            return (z > 0.0).astype(np.float64)
        case Activation.TANH:
            return 1.0 - np.tanh(z) ** 2


def _is_linear(block: DenseBlock, layer: int) -> bool:
    return layer == block.num_layers - 1 and not block.activate_output


def block_forward(block: DenseBlock, x: FloatArray) -> tuple[FloatArray, BlockCache]:
    if x.ndim != 2 or x.shape[1] != block.input_dim:
        raise DimensionMismatchException("block input width", block.input_dim, x.shape)

    cache = BlockCache(inputs=[], pre_activations=[])
    a = x
    for layer, (weight, bias) in enumerate(zip(block.weights, block.biases, strict=True)):
        cache.inputs.append(a)
        z = a @ weight + bias
        cache.pre_activations.append(z)
        a = z if _is_linear(block, layer) else activate(z, block.activation)
    return a, cache


def block_backward(
    block: DenseBlock, cache: BlockCache, grad_out: FloatArray
) -> tuple[BlockGradients, FloatArray]:
    """Backpropagate ``grad_out`` (dL/d block output) through the block.

    Returns the parameter gradients and dL/d block input.
    """
    grads_w: list[FloatArray] = [np.empty(0)] * block.num_layers
    grads_b: list[FloatArray] = [np.empty(0)] * block.num_layers

    delta = grad_out
    for layer in reversed(range(block.num_layers)):
        if not _is_linear(block, layer):
            delta = delta * activation_derivative(cache.pre_activations[layer], block.activation)
        grads_w[layer] = cache.inputs[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        delta = delta @ block.weights[layer].T
    return BlockGradients(weights=grads_w, biases=grads_b), delta


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> FloatArray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_block(
    rng: np.random.Generator,
    input_dim: int,
    widths: Sequence[int],
    activation: Activation,
    activate_output: bool,
) -> DenseBlock:
    """Glorot-uniform weights and zero biases for a chain input_dim -> widths."""
    weights: list[FloatArray] = []
    biases: list[FloatArray] = []
    fan_in = input_dim
    for width in widths:
        weights.append(glorot_uniform(rng, fan_in, width))
        biases.append(np.zeros(width))
        fan_in = width
    return DenseBlock(
        input_dim=input_dim,
        weights=tuple(weights),
        biases=tuple(biases),
        activation=activation,
        activate_output=activate_output,
    )


def apply_step(block: DenseBlock, grads: BlockGradients, lr: float) -> DenseBlock:
    return DenseBlock(
        input_dim=block.input_dim,
        weights=tuple(w - lr * g for w, g in zip(block.weights, grads.weights, strict=True)),
        biases=tuple(b - lr * g for b, g in zip(block.biases, grads.biases, strict=True)),
        activation=block.activation,
        activate_output=block.activate_output,
    )
