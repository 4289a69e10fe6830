"""Query results and clustering outcomes."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from app.exceptions import ProtocolException


@dataclass(frozen=True)
class QuerySelection:
    """Ids picked by a query strategy, with the uncertainty score of each."""

    selected_ids: tuple[int, ...]
    scores: tuple[float, ...]
    strategy_tag: str

    def __post_init__(self) -> None:
        if len(set(self.selected_ids)) != len(self.selected_ids):
            raise ProtocolException(f"Strategy {self.strategy_tag} selected duplicate ids")
        if len(self.scores) != len(self.selected_ids):
            raise ProtocolException(f"Strategy {self.strategy_tag} returned {len(self.scores)} scores for {len(self.selected_ids)} ids")

    def __len__(self) -> int:
        return len(self.selected_ids)

    @classmethod
    def empty(cls, strategy_tag: str) -> "QuerySelection":
        return cls(selected_ids=(), scores=(), strategy_tag=strategy_tag)


@dataclass(frozen=True, eq=False)
class Clustering:
    """Centroids plus nearest-centroid assignment of every input point.

    ``k_requested`` differs from ``k`` when the input had fewer distinct
    points than requested clusters. ``wcss_history`` holds the within-cluster
    sum of squares after the initial assignment and after every Lloyd
    iteration.
    """

    centroids: NDArray[np.float64]
    assignment: NDArray[np.int64]
    k_requested: int
    wcss_history: tuple[float, ...]
    n_iter: int

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def reduced(self) -> bool:
        return self.k < self.k_requested

    @property
    def wcss(self) -> float:
        return self.wcss_history[-1]
