"""Fine-tuning and self-supervised pre-training schemas."""

from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.consts import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN_SIZES,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LR_DECAY_EPOCH,
    DEFAULT_LR_DECAY_FACTOR,
    DEFAULT_TAU,
)
from app.models.network import Activation


class TrainConfig(BaseModel):
    """SGD fine-tuning with a single step decay of the learning rate."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(DEFAULT_EPOCHS, ge=1)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1)
    learning_rate: float = Field(DEFAULT_LEARNING_RATE, gt=0.0)
    lr_decay_factor: float = Field(DEFAULT_LR_DECAY_FACTOR, gt=0.0, le=1.0)
    lr_decay_epoch: int = Field(DEFAULT_LR_DECAY_EPOCH, ge=1)
    seed: int = 0
    augment_noise_std: float | None = Field(
        None, ge=0.0, description="Feature noise std; None = 0.05 x training feature std, 0 disables"
    )
    freeze_encoder: bool = Field(False, description="Update the classification head only")

    @model_validator(mode="after")
    def _decay_within_schedule(self) -> Self:
        if self.lr_decay_epoch > self.epochs:
            raise ValueError(
                f"lr_decay_epoch ({self.lr_decay_epoch}) must not exceed epochs ({self.epochs})"
            )
        return self


class AugmentSpec(BaseModel):
    """Vector-data augmentation: additive Gaussian noise, then random coordinate masking."""

    model_config = ConfigDict(extra="forbid")

    noise_std: float = Field(0.1, ge=0.0)
    mask_prob: float = Field(0.1, ge=0.0, lt=1.0)


class ByolConfig(BaseModel):
    """Toy-scale BYOL pre-training configuration."""

    model_config = ConfigDict(extra="forbid")

    hidden_sizes: list[int] = Field(default_factory=lambda: list(DEFAULT_HIDDEN_SIZES))
    activation: Activation = Activation.RELU
    epochs: int = Field(50, ge=1)
    batch_size: int = Field(100, ge=1)
    learning_rate: float = Field(0.05, ge=0.0)
    momentum: float = Field(0.0, ge=0.0, lt=1.0)
    tau: float = Field(DEFAULT_TAU, ge=0.0, le=1.0)
    augment: AugmentSpec = Field(default_factory=AugmentSpec)
    seed: int = 0

    @model_validator(mode="after")
    def _positive_widths(self) -> Self:
        if not self.hidden_sizes or any(width < 1 for width in self.hidden_sizes):
            raise ValueError("hidden_sizes must list at least one positive width")
        return self
