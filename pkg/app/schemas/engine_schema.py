"""Active learning protocol configuration and run history schemas."""

from enum import StrEnum
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.consts import (
    DEFAULT_CLUSTER_MAX_ITER,
    DEFAULT_CLUSTER_N_INIT,
    DEFAULT_CLUSTER_TOL,
    DEFAULT_HIDDEN_SIZES,
    DEFAULT_INITIAL_LABELED,
    DEFAULT_M_FACTOR,
    DEFAULT_PER_ITERATION_BUDGET,
)
from app.models.network import Activation, ModelParams
from app.schemas.training_schema import TrainConfig


class StrategyName(StrEnum):
    """Selectable query strategies."""
    RANDOM = "random"
    MGE = "mge"
    MGE_CLUSTERING = "mge_clustering"


class ALConfig(BaseModel):
    """One active learning run: budgets, strategy and fine-tuning setup."""

    model_config = ConfigDict(extra="forbid")

    initial_labeled: int = Field(DEFAULT_INITIAL_LABELED, ge=1, description="Initial labeled set size M")
    per_iteration_budget: int = Field(DEFAULT_PER_ITERATION_BUDGET, ge=1, description="Labels per iteration b")
    total_budget: int = Field(200, ge=1, description="Total labels acquired after the initial set, B")
    strategy: StrategyName = StrategyName.MGE_CLUSTERING
    m_factor: int = Field(DEFAULT_M_FACTOR, ge=1, description="Candidate pool m = m_factor x b")
    hidden_sizes: list[int] = Field(default_factory=lambda: list(DEFAULT_HIDDEN_SIZES))
    activation: Activation = Activation.RELU
    train: TrainConfig = Field(default_factory=TrainConfig)
    use_pretrained_encoder: bool = False
    seed: int = 0
    cluster_max_iter: int = Field(DEFAULT_CLUSTER_MAX_ITER, ge=0)
    cluster_tol: float = Field(DEFAULT_CLUSTER_TOL, ge=0.0)
    cluster_n_init: int = Field(DEFAULT_CLUSTER_N_INIT, ge=1, description="Seeded restarts per clustering")

    @model_validator(mode="after")
    def _budget_order(self) -> Self:
        if self.total_budget < self.per_iteration_budget:
            raise ValueError(
                f"total_budget ({self.total_budget}) must be at least per_iteration_budget ({self.per_iteration_budget})"
            )
        if any(width < 1 for width in self.hidden_sizes):
            raise ValueError("hidden_sizes must be positive")
        return self


class IterationRecord(BaseModel):
    """Test-set evaluation after fine-tuning at one labeled-set size."""

    model_config = ConfigDict(extra="forbid")

    iteration: int = Field(..., ge=0)
    labeled_count: int = Field(..., ge=0)
    selected_ids: list[int] = Field(
        default_factory=list, description="Ids acquired by the query that follows this evaluation"
    )
    selected_scores: list[float] = Field(default_factory=list)
    micro_f1: float = Field(..., ge=0.0, le=1.0)
    macro_f1: float = Field(..., ge=0.0, le=1.0)
    per_class_f1: list[float] = Field(default_factory=list)


class RunHistory(BaseModel):
    """All iteration records of one run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    run_id: str
    strategy: str
    scenario: str = "scenario_1"
    seed: int
    records: list[IterationRecord] = Field(default_factory=list)
    final_params: ModelParams | None = Field(None, exclude=True)

    @property
    def labeled_counts(self) -> list[int]:
        return [record.labeled_count for record in self.records]

    @property
    def acquired_ids(self) -> list[int]:
        return [sample_id for record in self.records for sample_id in record.selected_ids]


class RunRecordLine(IterationRecord):
    """One line of a run's JSONL results file: an iteration record tagged with its run."""

    run_id: str
    strategy: str
    scenario: str
    seed: int

    @classmethod
    def from_record(cls, history: RunHistory, record: IterationRecord) -> "RunRecordLine":
        return cls(
            run_id=history.run_id,
            strategy=history.strategy,
            scenario=history.scenario,
            seed=history.seed,
            **record.model_dump(),
        )

    def to_record(self) -> IterationRecord:
        return IterationRecord.model_validate(self.model_dump(include=set(IterationRecord.model_fields)))
