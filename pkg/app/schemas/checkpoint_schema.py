"""Versioned parameter checkpoint container."""

from pydantic import BaseModel, ConfigDict, Field


class LayerRecord(BaseModel):
    """One dense layer: (fan_in, fan_out) shape, row-major weights and bias."""

    model_config = ConfigDict(extra="forbid")

    shape: tuple[int, int]
    weights: list[float]
    bias: list[float]


class ParamsCheckpoint(BaseModel):
    """Serialized classifier or pre-trained encoder.

    ``head`` is None for encoder-only checkpoints.
    """

    model_config = ConfigDict(extra="forbid")

    format_version: int = Field(..., ge=1)
    role: str
    activation: str
    input_dim: int = Field(..., ge=1)
    encoder_layers: list[LayerRecord] = Field(default_factory=list)
    head: LayerRecord | None = None
