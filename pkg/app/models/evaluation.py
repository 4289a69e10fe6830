"""Per-class confusion counts."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from app.exceptions import DimensionMismatchException


@dataclass(frozen=True, eq=False)
class ConfusionCounts:
    """TP/FP/FN/TN per class; every class sums to the number of evaluated samples."""

    tp: NDArray[np.int64]
    fp: NDArray[np.int64]
    fn: NDArray[np.int64]
    tn: NDArray[np.int64]

    def __post_init__(self) -> None:
        arrays = [np.asarray(a, dtype=np.int64).reshape(-1) for a in (self.tp, self.fp, self.fn, self.tn)]
        if len({a.shape for a in arrays}) != 1:
            raise DimensionMismatchException("confusion count lengths", arrays[0].shape, tuple(a.shape[0] for a in arrays))
        for name, array in zip(("tp", "fp", "fn", "tn"), arrays, strict=True):
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def num_classes(self) -> int:
        return int(self.tp.shape[0])

    @property
    def n_samples(self) -> int:
        if self.num_classes == 0:
            return 0
        return int(self.tp[0] + self.fp[0] + self.fn[0] + self.tn[0])


@dataclass(frozen=True, eq=False)
class EvaluationResult:
    """Micro/macro/per-class F1 of one classifier on one archive."""

    counts: ConfusionCounts
    micro_f1: float
    macro_f1: float
    per_class_f1: NDArray[np.float64]
