"""Aggregated learning-curve schemas."""

from pydantic import BaseModel, Field


class CurvePoint(BaseModel):
    """Mean and population std of the F1 scores at one labeled-set size."""

    labeled_count: int
    micro_f1_mean: float = Field(..., ge=0.0, le=1.0)
    micro_f1_std: float = Field(..., ge=0.0)
    macro_f1_mean: float = Field(..., ge=0.0, le=1.0)
    macro_f1_std: float = Field(..., ge=0.0)


class CurveSummary(BaseModel):
    """Learning curve averaged over runs sharing a checkpoint grid."""

    strategy: str
    scenario: str
    num_runs: int
    points: list[CurvePoint]
    mean_macro_f1_over_iterations: float = Field(..., ge=0.0, le=1.0)
