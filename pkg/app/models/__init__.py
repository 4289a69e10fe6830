"""Domain value types for the active learning simulator."""

from app.models.archive import Archive, MultiLabelVector, Sample
from app.models.byol import ByolState
from app.models.evaluation import ConfusionCounts, EvaluationResult
from app.models.network import (
    Activation,
    DenseBlock,
    ForwardResult,
    GradientEmbedding,
    ModelParams,
)
from app.models.selection import Clustering, QuerySelection

__all__: list[str] = [
    "Activation",
    "Archive",
    "ByolState",
    "Clustering",
    "ConfusionCounts",
    "DenseBlock",
    "EvaluationResult",
    "ForwardResult",
    "GradientEmbedding",
    "ModelParams",
    "MultiLabelVector",
    "QuerySelection",
    "Sample",
]
