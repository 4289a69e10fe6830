"""Multi-label evaluation and multi-run curve aggregation."""

import logging
import math
from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.exceptions import AggregationException, DimensionMismatchException
from app.models.archive import Archive
from app.models.evaluation import ConfusionCounts, EvaluationResult
from app.models.network import ModelParams
from app.schemas.engine_schema import RunHistory
from app.schemas.metrics_schema import CurvePoint, CurveSummary
from app.services.classifier_service import ClassifierService
from app.services.query_service import QueryService

logger = logging.getLogger(__name__)


def _f1(tp: NDArray[np.int64], fp: NDArray[np.int64], fn: NDArray[np.int64]) -> NDArray[np.float64]:
    # harmonic mean of precision and recall, written on counts; zero denominators give 0
    denominator = 2 * tp + fp + fn
    safe = np.where(denominator > 0, denominator, 1)
    return np.where(denominator > 0, 2.0 * tp / safe, 0.0)


def _mean(values: Sequence[float]) -> float:
    # fsum keeps the result independent of run order
    return math.fsum(values) / len(values)


def _pstd(values: Sequence[float]) -> float:
    mean = _mean(values)
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))


class EvaluationService:
    """Service computing F1 scores and aggregating learning curves."""

    def __init__(self, classifier_service: ClassifierService, query_service: QueryService) -> None:
        self.classifier_service = classifier_service
        self.query_service = query_service

    def confusion(self, predictions: ArrayLike, truths: ArrayLike) -> ConfusionCounts:
        pred = np.atleast_2d(np.asarray(predictions)).astype(bool)
        true = np.atleast_2d(np.asarray(truths)).astype(bool)
        if pred.shape != true.shape:
            raise DimensionMismatchException("predictions/truths shape", true.shape, pred.shape)
        return ConfusionCounts(
            tp=np.sum(pred & true, axis=0),
            fp=np.sum(pred & ~true, axis=0),
            fn=np.sum(~pred & true, axis=0),
            tn=np.sum(~pred & ~true, axis=0),
        )

    def micro_f1(self, counts: ConfusionCounts) -> float:
        """F1 of the class-pooled counts."""
        pooled = _f1(
            np.array([counts.tp.sum()]), np.array([counts.fp.sum()]), np.array([counts.fn.sum()])
        )
        return float(pooled[0])

    def per_class_f1(self, counts: ConfusionCounts) -> NDArray[np.float64]:
        return _f1(counts.tp, counts.fp, counts.fn)

    def macro_f1(self, counts: ConfusionCounts) -> float:
        """Unweighted mean of per-class F1 over all C classes."""
        if counts.num_classes == 0:
            return 0.0
        return float(np.mean(self.per_class_f1(counts)))

    def evaluate(self, params: ModelParams, archive: Archive) -> EvaluationResult:
        """Forward, threshold at 0.5 and score against the archive labels."""
        if archive.N == 0:
            counts = self.confusion(np.zeros((0, archive.C)), np.zeros((0, archive.C)))
        else:
            probs = self.classifier_service.forward(params, archive.features).probs
            counts = self.confusion(self.query_service.pseudo_label(probs), archive.labels)
        return EvaluationResult(
            counts=counts,
            micro_f1=self.micro_f1(counts),
            macro_f1=self.macro_f1(counts),
            per_class_f1=self.per_class_f1(counts),
        )

    def aggregate(self, histories: Sequence[RunHistory]) -> CurveSummary:
        """Pointwise mean and population std across runs sharing a checkpoint grid.

        The mean-over-iterations value averages macro F1 over each run's
        checkpoints first, then over runs.

        Raises:
            AggregationException: On no runs, empty runs, mixed groups or mismatched grids
        """
        if not histories:
            raise AggregationException("No run histories to aggregate")

        first = histories[0]
        grid = first.labeled_counts
        if not grid:
            raise AggregationException(f"Run {first.run_id} has no iteration records")
        for history in histories[1:]:
            if (history.strategy, history.scenario) != (first.strategy, first.scenario):
                raise AggregationException(
                    f"Run {history.run_id} belongs to {history.strategy}/{history.scenario}, "
                    f"expected {first.strategy}/{first.scenario}"
                )
            if history.labeled_counts != grid:
                raise AggregationException(
                    f"Run {history.run_id} checkpoints {history.labeled_counts} differ from {grid}"
                )

        points: list[CurvePoint] = []
        for t, labeled_count in enumerate(grid):
            micro = [history.records[t].micro_f1 for history in histories]
            macro = [history.records[t].macro_f1 for history in histories]
            points.append(
                CurvePoint(
                    labeled_count=labeled_count,
                    micro_f1_mean=_mean(micro),
                    micro_f1_std=_pstd(micro),
                    macro_f1_mean=_mean(macro),
                    macro_f1_std=_pstd(macro),
                )
            )

        per_run = [_mean([record.macro_f1 for record in history.records]) for history in histories]
        return CurveSummary(
            strategy=first.strategy,
            scenario=first.scenario,
            num_runs=len(histories),
            points=points,
            mean_macro_f1_over_iterations=_mean(per_run),
        )
