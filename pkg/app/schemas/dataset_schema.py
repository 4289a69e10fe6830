"""Dataset generation and imbalance-scenario schemas."""

from pydantic import BaseModel, ConfigDict, Field


class CooccurrencePair(BaseModel):
    """Copy class_a's bit into class_b with probability ``strength``."""

    model_config = ConfigDict(extra="forbid")

    class_a: int = Field(..., ge=0, description="Source class index")
    class_b: int = Field(..., ge=0, description="Coupled class index")
    strength: float = Field(..., ge=0.0, le=1.0, description="Coupling probability")


class SyntheticConfig(BaseModel):
    """Synthetic multi-label archive generator configuration."""

    model_config = ConfigDict(extra="forbid")

    num_classes: int = Field(..., ge=1, description="Class count C")
    feature_dim: int = Field(..., ge=1, description="Feature dimension d")
    num_samples: int = Field(..., ge=0, description="Archive size N")
    class_priors: list[float] = Field(..., description="Per-class Bernoulli prior, length C")
    cooccurrence_pairs: list[CooccurrencePair] = Field(default_factory=list)
    noise_std: float = Field(0.5, ge=0.0, description="Std of isotropic Gaussian feature noise")
    seed: int = Field(0, description="Generator seed")
    allow_empty_labels: bool = Field(
        False, description="Keep all-zero label vectors instead of redrawing them"
    )
    class_names: list[str] | None = Field(None, description="Optional class names, length C")


class ScenarioSpec(BaseModel):
    """Minority-class sample removal deepening the pool's class imbalance.

    Either list ``minority_classes`` explicitly or set ``random_minority_count``
    to draw that many classes from ``minority_candidates``.
    """

    model_config = ConfigDict(extra="forbid")

    minority_classes: list[int] = Field(default_factory=list)
    remove_per_class: int = Field(0, ge=0, description="Samples removed per listed class")
    exclusion_pairs: list[tuple[int, int]] = Field(
        default_factory=list, description="Class pairs that must not both be listed"
    )
    seed: int = Field(0, description="Removal seed")
    random_minority_count: int | None = Field(None, ge=1)
    minority_candidates: list[int] = Field(default_factory=list)
