"""Classifier service: feed-forward multi-label classifier with sigmoid outputs."""

import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import expit

from app.consts import (
    AUTO_AUGMENT_NOISE_RATIO,
    CHECKPOINT_FORMAT_VERSION,
    LOG_CLAMP_EPS,
    ROLE_CLASSIFIER,
    ROLE_PRETRAINED_ENCODER,
)
from app.exceptions import (
    ConfigurationError,
    DegenerateInputException,
    DimensionMismatchException,
    RecordNotFoundException,
    TrainingDivergedException,
)
from app.models.archive import Archive
from app.models.network import (
    Activation,
    DenseBlock,
    FloatArray,
    ForwardResult,
    GradientEmbedding,
    ModelParams,
)
from app.schemas.checkpoint_schema import LayerRecord, ParamsCheckpoint
from app.schemas.training_schema import TrainConfig
from app.utils.dense_ops import apply_step, block_backward, block_forward, glorot_uniform, init_block

logger = logging.getLogger(__name__)

FINE_TUNE_STAGE = "fine-tuning"


class ClassifierService:
    """Service for initializing, evaluating and training the classifier.

    The network is an encoder block (activated hidden layers, possibly none)
    followed by a linear head; ``probs = sigmoid(h @ W + b)``.
    """

    def init_params(
        self,
        d: int,
        hidden_sizes: Sequence[int],
        num_classes: int,
        seed: int,
        activation: Activation = Activation.RELU,
    ) -> ModelParams:
        """Glorot-uniform initialization; an empty ``hidden_sizes`` gives a single linear layer.

        Raises:
            ConfigurationError: If any dimension is below 1
        """
        if d < 1 or num_classes < 1 or any(width < 1 for width in hidden_sizes):
            raise ConfigurationError(
                f"classifier dimensions must be positive (d={d}, hidden={list(hidden_sizes)}, C={num_classes})"
            )
        rng = np.random.default_rng(seed)
        encoder = init_block(rng, d, hidden_sizes, activation, activate_output=True)
        return ModelParams(
            encoder=encoder,
            head_weight=glorot_uniform(rng, encoder.output_dim, num_classes),
            head_bias=np.zeros(num_classes),
        )

    def forward(self, params: ModelParams, features: ArrayLike) -> ForwardResult:
        """Forward a single vector or an (N, d) batch."""
        x = np.asarray(features, dtype=np.float64)
        single = x.ndim == 1
        batch = np.atleast_2d(x)
        if batch.ndim != 2 or batch.shape[1] != params.input_dim:
            raise DimensionMismatchException("feature length", params.input_dim, x.shape)

        penultimate, _ = block_forward(params.encoder, batch)
        logits = penultimate @ params.head_weight + params.head_bias
        probs = expit(logits)
        if single:
            return ForwardResult(penultimate=penultimate[0], logits=logits[0], probs=probs[0])
        return ForwardResult(penultimate=penultimate, logits=logits, probs=probs)

    def bce_loss(self, probs: ArrayLike, labels: ArrayLike) -> float:
        """Mean binary cross-entropy; log arguments are clamped at 1e-12.

        For a batch this is the mean over samples of the per-sample loss.
        """
        p = np.asarray(probs, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64)
        if p.shape != y.shape:
            raise DimensionMismatchException("probs/labels shape", p.shape, y.shape)
        if p.size == 0:
            return 0.0
        terms = y * np.log(np.maximum(p, LOG_CLAMP_EPS)) + (1.0 - y) * np.log(np.maximum(1.0 - p, LOG_CLAMP_EPS))
        return float(-np.mean(terms))

    def sgd_step(
        self,
        params: ModelParams,
        features: FloatArray,
        labels: NDArray[np.generic],
        lr: float,
        freeze_encoder: bool = False,
    ) -> tuple[ModelParams, float]:
        """One mini-batch SGD step on the mean BCE loss.

        Returns the updated parameters and the batch loss before the step.
        """
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        y = np.atleast_2d(np.asarray(labels, dtype=np.float64))
        if x.shape[1] != params.input_dim:
            raise DimensionMismatchException("feature length", params.input_dim, x.shape)
        if y.shape != (x.shape[0], params.num_classes):
            raise DimensionMismatchException("label shape", (x.shape[0], params.num_classes), y.shape)

        penultimate, cache = block_forward(params.encoder, x)
        probs = expit(penultimate @ params.head_weight + params.head_bias)
        loss = self.bce_loss(probs, y)

        delta = (probs - y) / (params.num_classes * x.shape[0])
        grad_w = penultimate.T @ delta
        grad_b = delta.sum(axis=0)

        encoder = params.encoder
        if not freeze_encoder and encoder.num_layers:
            grads, _ = block_backward(encoder, cache, delta @ params.head_weight.T)
            encoder = apply_step(encoder, grads, lr)

        updated = ModelParams(
            encoder=encoder,
            head_weight=params.head_weight - lr * grad_w,
            head_bias=params.head_bias - lr * grad_b,
        )
        return updated, loss

    def resolve_noise_std(self, config: TrainConfig, features: FloatArray) -> float:
        if config.augment_noise_std is not None:
            return config.augment_noise_std
        return AUTO_AUGMENT_NOISE_RATIO * float(np.std(features)) if features.size else 0.0

    def train(
        self,
        params: ModelParams,
        labeled: Archive,
        config: TrainConfig,
        iteration: int | None = None,
    ) -> ModelParams:
        """Shuffled mini-batch SGD with one step decay of the learning rate.

        Epochs are counted from 0; the decay applies from epoch index
        ``lr_decay_epoch`` on. ``iteration`` only labels divergence errors.

        Raises:
            ConfigurationError: If the labeled set is empty
            TrainingDivergedException: If the loss or parameters stop being finite
        """
        if labeled.N == 0:
            raise ConfigurationError("cannot train on an empty labeled set")
        if labeled.d != params.input_dim:
            raise DimensionMismatchException("feature length", params.input_dim, labeled.d)

        rng = np.random.default_rng(config.seed)
        noise_std = self.resolve_noise_std(config, labeled.features)
        n = labeled.N

        for epoch in range(config.epochs):
            lr = config.learning_rate
            if epoch >= config.lr_decay_epoch:
                lr *= config.lr_decay_factor

            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, config.batch_size):
                batch = order[start:start + config.batch_size]
                x = labeled.features[batch]
                if noise_std > 0.0:
                    x = x + noise_std * rng.standard_normal(x.shape)
                try:
                    params, loss = self.sgd_step(params, x, labeled.labels[batch], lr, config.freeze_encoder)
                except DegenerateInputException as e:
                    raise TrainingDivergedException(FINE_TUNE_STAGE, epoch, iteration) from e
                total += loss * batch.size

            mean_loss = total / n
            if not np.isfinite(mean_loss):
                raise TrainingDivergedException(FINE_TUNE_STAGE, epoch, iteration)
            logger.debug(f"Fine-tuning epoch {epoch}: loss={mean_loss:.6f} lr={lr:g}")

        return params

    def last_layer_gradient(
        self, params: ModelParams, features: ArrayLike, labels: ArrayLike
    ) -> GradientEmbedding:
        """Gradient of the BCE loss w.r.t. the head weights, flattened (p*C).

        Closed form for sigmoid + BCE: outer(h, p - y) / C. Biases are excluded.
        """
        result = self.forward(params, np.asarray(features, dtype=np.float64).reshape(-1))
        y = np.asarray(labels, dtype=np.float64).reshape(-1)
        if y.shape != (params.num_classes,):
            raise DimensionMismatchException("label length", params.num_classes, y.shape)
        return GradientEmbedding.from_values(
            np.outer(result.penultimate, result.probs - y) / params.num_classes
        )

    def last_layer_gradients(
        self, penultimate: FloatArray, probs: FloatArray, labels: NDArray[np.generic]
    ) -> FloatArray:
        """Row-wise last-layer gradients for a batch of forward results, shape (N, p*C)."""
        residual = probs - np.asarray(labels, dtype=np.float64)
        num_classes = probs.shape[1]
        grads = np.einsum("np,nc->npc", penultimate, residual) / num_classes
        return grads.reshape(penultimate.shape[0], -1)

    # Checkpoints

    @staticmethod
    def _layer_record(weight: FloatArray, bias: FloatArray) -> LayerRecord:
        return LayerRecord(
            shape=(int(weight.shape[0]), int(weight.shape[1])),
            weights=weight.ravel().tolist(),
            bias=bias.tolist(),
        )

    @staticmethod
    def _layer_arrays(record: LayerRecord) -> tuple[FloatArray, FloatArray]:
        fan_in, fan_out = record.shape
        if len(record.weights) != fan_in * fan_out or len(record.bias) != fan_out:
            raise DimensionMismatchException(
                "checkpoint layer size", (fan_in * fan_out, fan_out), (len(record.weights), len(record.bias))
            )
        weight = np.asarray(record.weights, dtype=np.float64).reshape(fan_in, fan_out)
        return weight, np.asarray(record.bias, dtype=np.float64)

    def to_checkpoint(self, encoder: DenseBlock, head: tuple[FloatArray, FloatArray] | None) -> ParamsCheckpoint:
        return ParamsCheckpoint(
            format_version=CHECKPOINT_FORMAT_VERSION,
            role=ROLE_CLASSIFIER if head is not None else ROLE_PRETRAINED_ENCODER,
            activation=encoder.activation.value,
            input_dim=encoder.input_dim,
            encoder_layers=[self._layer_record(w, b) for w, b in zip(encoder.weights, encoder.biases, strict=True)],
            head=self._layer_record(*head) if head is not None else None,
        )

    def _write(self, checkpoint: ParamsCheckpoint, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(checkpoint.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info(f"Saved {checkpoint.role} checkpoint to {path}")

    def _read(self, path: Path, role: str) -> ParamsCheckpoint:
        if not path.is_file():
            raise RecordNotFoundException("Checkpoint", str(path))
        checkpoint = ParamsCheckpoint.model_validate_json(path.read_text(encoding="utf-8"))
        if checkpoint.format_version != CHECKPOINT_FORMAT_VERSION:
            raise ConfigurationError(
                f"Unsupported checkpoint format_version {checkpoint.format_version} in {path}"
            )
        if checkpoint.role != role:
            raise ConfigurationError(f"Checkpoint {path} has role {checkpoint.role!r}, expected {role!r}")
        return checkpoint

    def _encoder_from(self, checkpoint: ParamsCheckpoint) -> DenseBlock:
        layers = [self._layer_arrays(record) for record in checkpoint.encoder_layers]
        return DenseBlock(
            input_dim=checkpoint.input_dim,
            weights=tuple(w for w, _ in layers),
            biases=tuple(b for _, b in layers),
            activation=Activation(checkpoint.activation),
        )

    def save_params(self, params: ModelParams, path: Path) -> None:
        self._write(self.to_checkpoint(params.encoder, (params.head_weight, params.head_bias)), path)

    def load_params(self, path: Path) -> ModelParams:
        """Load a classifier checkpoint; forward outputs reproduce exactly.

        Raises:
            RecordNotFoundException: If the file does not exist
            ConfigurationError: On an unknown format version or wrong role
        """
        checkpoint = self._read(path, ROLE_CLASSIFIER)
        if checkpoint.head is None:
            raise ConfigurationError(f"Classifier checkpoint {path} has no head layer")
        head_weight, head_bias = self._layer_arrays(checkpoint.head)
        return ModelParams(encoder=self._encoder_from(checkpoint), head_weight=head_weight, head_bias=head_bias)

    def save_encoder(self, encoder: DenseBlock, path: Path) -> None:
        self._write(self.to_checkpoint(encoder, None), path)

    def load_encoder(self, path: Path) -> DenseBlock:
        return self._encoder_from(self._read(path, ROLE_PRETRAINED_ENCODER))
