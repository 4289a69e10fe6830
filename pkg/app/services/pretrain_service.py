"""Self-supervised encoder pre-training (BYOL on vector data)."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike
from prometheus_client import Counter

from app.consts import NORM_EPS
from app.exceptions import (
    ConfigurationError,
    DegenerateInputException,
    DimensionMismatchException,
    TrainingDivergedException,
)
from app.models.archive import Archive
from app.models.byol import ByolState
from app.models.network import DenseBlock, FloatArray, ModelParams
from app.schemas.training_schema import AugmentSpec, ByolConfig
from app.utils.dense_ops import (
    BlockGradients,
    block_backward,
    block_forward,
    glorot_uniform,
    init_block,
)

SSL_PRETRAIN_EPOCHS_TOTAL = Counter(
    "ssl_pretrain_epochs_total",
    "BYOL pre-training epochs completed",
)

logger = logging.getLogger(__name__)

PRETRAIN_STAGE = "pre-training"


@dataclass
class PretrainResult:
    """Pre-trained online encoder, mean loss per epoch and the final twin state."""

    encoder: DenseBlock
    epoch_losses: list[float] = field(default_factory=list)
    state: ByolState | None = None


class _MomentumSgd:
    """Plain SGD with optional heavy-ball momentum over one dense block."""

    def __init__(self, lr: float, momentum: float) -> None:
        self.lr = lr
        self.momentum = momentum
        self._velocity: BlockGradients | None = None

    def step(self, block: DenseBlock, grads: BlockGradients) -> DenseBlock:
        if self.momentum > 0.0:
            if self._velocity is None:
                self._velocity = grads
            else:
                self._velocity = BlockGradients(
                    weights=[self.momentum * v + g for v, g in zip(self._velocity.weights, grads.weights, strict=True)],
                    biases=[self.momentum * v + g for v, g in zip(self._velocity.biases, grads.biases, strict=True)],
                )
            grads = self._velocity
        return DenseBlock(
            input_dim=block.input_dim,
            weights=tuple(w - self.lr * g for w, g in zip(block.weights, grads.weights, strict=True)),
            biases=tuple(b - self.lr * g for b, g in zip(block.biases, grads.biases, strict=True)),
            activation=block.activation,
            activate_output=block.activate_output,
        )


def _normalize_rows(u: FloatArray) -> tuple[FloatArray, FloatArray]:
    norms = np.maximum(np.linalg.norm(u, axis=1, keepdims=True), NORM_EPS)
    return u / norms, norms


class PretrainService:
    """Service for BYOL pre-training and transfer into the classifier.

    Projector and predictor are p -> 2p -> p MLPs with a linear output;
    the target twins start as copies of the online blocks.
    """

    def augment(self, features: ArrayLike, spec: AugmentSpec, rng: np.random.Generator) -> FloatArray:
        """Add Gaussian noise, then zero each coordinate with probability ``mask_prob``.

        Both random draws happen even when noise_std or mask_prob is 0, so the rng
        stream advances identically.
        """
        x = np.asarray(features, dtype=np.float64)
        noise = rng.standard_normal(x.shape)
        mask = rng.random(x.shape) < spec.mask_prob
        return np.where(mask, 0.0, x + spec.noise_std * noise)

    def byol_loss(self, online_pred: ArrayLike, target_proj: ArrayLike) -> float:
        """Norm-adjusted MSE ``|u/|u| - v/|v||^2``, equal to 2 - 2 cos(u, v).

        Raises:
            DegenerateInputException: If either vector has zero norm
        """
        u = np.asarray(online_pred, dtype=np.float64).reshape(-1)
        v = np.asarray(target_proj, dtype=np.float64).reshape(-1)
        if u.shape != v.shape:
            raise DimensionMismatchException("BYOL vector length", u.shape[0], v.shape[0])
        norm_u = float(np.linalg.norm(u))
        norm_v = float(np.linalg.norm(v))
        if norm_u == 0.0 or norm_v == 0.0:
            raise DegenerateInputException("BYOL loss is undefined for zero-norm vectors")
        return float(np.sum((u / norm_u - v / norm_v) ** 2))

    def ema_update(self, state: ByolState) -> ByolState:
        """target <- tau * target + (1 - tau) * online, for encoder and projector."""
        tau = state.tau

        def blend(target: FloatArray, online: FloatArray) -> FloatArray:
            return tau * target + (1.0 - tau) * online

        return ByolState(
            online_encoder=state.online_encoder,
            online_projector=state.online_projector,
            online_predictor=state.online_predictor,
            target_encoder=state.target_encoder.combine(state.online_encoder, blend),
            target_projector=state.target_projector.combine(state.online_projector, blend),
            tau=tau,
        )

    def init_state(self, d: int, config: ByolConfig, rng: np.random.Generator) -> ByolState:
        encoder = init_block(rng, d, config.hidden_sizes, config.activation, activate_output=True)
        p = encoder.output_dim
        projector = init_block(rng, p, [2 * p, p], config.activation, activate_output=False)
        predictor = init_block(rng, p, [2 * p, p], config.activation, activate_output=False)
        return ByolState(
            online_encoder=encoder,
            online_projector=projector,
            online_predictor=predictor,
            target_encoder=encoder,
            target_projector=projector,
            tau=config.tau,
        )

    def _batch_loss_and_grads(
        self, state: ByolState, view_a: FloatArray, view_b: FloatArray
    ) -> tuple[float, BlockGradients, BlockGradients, BlockGradients]:
        """Symmetric loss over both view orderings, and online-block gradients."""
        n = view_a.shape[0]
        views = np.concatenate([view_a, view_b])

        h, cache_enc = block_forward(state.online_encoder, views)
        z, cache_proj = block_forward(state.online_projector, h)
        q, cache_pred = block_forward(state.online_predictor, z)

        target_h, _ = block_forward(state.target_encoder, views)
        target_z, _ = block_forward(state.target_projector, target_h)
        # each online view predicts the target projection of the other view
        target_z = np.concatenate([target_z[n:], target_z[:n]])

        q_hat, q_norm = _normalize_rows(q)
        t_hat, _ = _normalize_rows(target_z)
        cos = np.sum(q_hat * t_hat, axis=1, keepdims=True)
        loss = float(np.mean(2.0 - 2.0 * cos))

        grad_q = -2.0 / q_norm * (t_hat - cos * q_hat) / (2 * n)
        grads_pred, grad_z = block_backward(state.online_predictor, cache_pred, grad_q)
        grads_proj, grad_h = block_backward(state.online_projector, cache_proj, grad_z)
        grads_enc, _ = block_backward(state.online_encoder, cache_enc, grad_h)
        return loss, grads_enc, grads_proj, grads_pred

    def pretrain(self, archive: Archive, config: ByolConfig) -> PretrainResult:
        """Run BYOL over the archive features; labels are never read.

        Raises:
            ConfigurationError: If the archive is empty
            TrainingDivergedException: If the loss or parameters stop being finite
        """
        if archive.N == 0:
            raise ConfigurationError("cannot pre-train on an empty archive")

        rng = np.random.default_rng(config.seed)
        state = self.init_state(archive.d, config, rng)
        optimizers = [_MomentumSgd(config.learning_rate, config.momentum) for _ in range(3)]
        n = archive.N
        losses: list[float] = []

        logger.info(
            f"Pre-training encoder {archive.d}->{state.online_encoder.output_dim} "
            f"on {n} samples for {config.epochs} epochs"
        )
        for epoch in range(config.epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, config.batch_size):
                batch = archive.features[order[start:start + config.batch_size]]
                view_a = self.augment(batch, config.augment, rng)
                view_b = self.augment(batch, config.augment, rng)
                loss, grads_enc, grads_proj, grads_pred = self._batch_loss_and_grads(state, view_a, view_b)
                if not np.isfinite(loss):
                    raise TrainingDivergedException(PRETRAIN_STAGE, epoch)
                try:
                    state = state.with_online(
                        optimizers[0].step(state.online_encoder, grads_enc),
                        optimizers[1].step(state.online_projector, grads_proj),
                        optimizers[2].step(state.online_predictor, grads_pred),
                    )
                    state = self.ema_update(state)
                except DegenerateInputException as e:
                    raise TrainingDivergedException(PRETRAIN_STAGE, epoch) from e
                total += loss * batch.shape[0]

            losses.append(total / n)
            SSL_PRETRAIN_EPOCHS_TOTAL.inc()
            logger.debug(f"Pre-training epoch {epoch}: loss={losses[-1]:.6f}")

        logger.info(f"Pre-training finished: loss {losses[0]:.4f} -> {losses[-1]:.4f}")
        return PretrainResult(encoder=state.online_encoder, epoch_losses=losses, state=state)

    def transfer(
        self,
        encoder: DenseBlock,
        num_classes: int,
        seed: int,
        input_dim: int | None = None,
        hidden_sizes: Sequence[int] | None = None,
    ) -> ModelParams:
        """Classifier params with the given encoder and a freshly seeded p -> C head.

        When ``input_dim`` or ``hidden_sizes`` are given the encoder must match
        them.

        Raises:
            ConfigurationError: If num_classes < 1
            DimensionMismatchException: If the encoder widths differ from the expected ones
        """
        if num_classes < 1:
            raise ConfigurationError(f"class count must be positive (got {num_classes})")
        if input_dim is not None and encoder.input_dim != input_dim:
            raise DimensionMismatchException("pre-trained encoder input width", input_dim, encoder.input_dim)
        if hidden_sizes is not None:
            widths = tuple(shape[1] for shape in encoder.layer_shapes)
            if widths != tuple(hidden_sizes):
                raise DimensionMismatchException("pre-trained encoder hidden widths", tuple(hidden_sizes), widths)
        rng = np.random.default_rng(seed)
        return ModelParams(
            encoder=encoder,
            head_weight=glorot_uniform(rng, encoder.output_dim, num_classes),
            head_bias=np.zeros(num_classes),
        )
