"""Query strategies: random baseline, MGE ranking and MGE+Clustering."""

import logging
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.consts import (
    DEFAULT_CLUSTER_MAX_ITER,
    DEFAULT_CLUSTER_N_INIT,
    DEFAULT_CLUSTER_TOL,
    DEFAULT_M_FACTOR,
    PSEUDO_LABEL_THRESHOLD,
)
from app.exceptions import ConfigurationError
from app.models.archive import Archive, MultiLabelVector
from app.models.network import FloatArray, ModelParams
from app.models.selection import QuerySelection
from app.schemas.engine_schema import StrategyName
from app.services.classifier_service import ClassifierService
from app.services.cluster_service import ClusterService

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MgeScores:
    """Per-sample MGE magnitudes and penultimate features, row-aligned with ``ids``."""

    ids: NDArray[np.int64]
    magnitudes: FloatArray
    penultimate: FloatArray

    def ranking(self) -> NDArray[np.int64]:
        """Row order by decreasing magnitude, ties by lowest id."""
        return np.lexsort((self.ids, -self.magnitudes)).astype(np.int64)


class QueryStrategy(Protocol):
    """A rule selecting which unlabeled samples to label next."""

    name: str

    def select(
        self, params: ModelParams, unlabeled: Archive, b: int, rng: np.random.Generator
    ) -> QuerySelection:
        ...


class QueryService:
    """Service implementing the sample-selection strategies."""

    def __init__(self, classifier_service: ClassifierService, cluster_service: ClusterService) -> None:
        self.classifier_service = classifier_service
        self.cluster_service = cluster_service

    def pseudo_label(self, probs: ArrayLike, threshold: float = PSEUDO_LABEL_THRESHOLD) -> MultiLabelVector:
        """1 where p >= threshold (boundary inclusive), else 0."""
        return (np.asarray(probs, dtype=np.float64) >= threshold).astype(np.int8)

    def score(self, params: ModelParams, unlabeled: Archive) -> MgeScores:
        """Gradient-embedding magnitudes under pseudo-labels, plus penultimate features."""
        result = self.classifier_service.forward(params, unlabeled.features)
        pseudo = self.pseudo_label(result.probs)
        grads = self.classifier_service.last_layer_gradients(result.penultimate, result.probs, pseudo)
        return MgeScores(
            ids=np.asarray(unlabeled.ids, dtype=np.int64),
            magnitudes=np.linalg.norm(grads, axis=1),
            penultimate=result.penultimate,
        )

    def mge_scores(self, params: ModelParams, unlabeled: Archive) -> dict[int, float]:
        scores = self.score(params, unlabeled)
        return {int(i): float(m) for i, m in zip(scores.ids, scores.magnitudes, strict=True)}

    @staticmethod
    def _check_budget(b: int) -> None:
        if b < 1:
            raise ConfigurationError(f"per-iteration budget must be at least 1 (got {b})")

    @staticmethod
    def _selection(scores: MgeScores, rows: NDArray[np.int64], tag: str) -> QuerySelection:
        return QuerySelection(
            selected_ids=tuple(int(i) for i in scores.ids[rows]),
            scores=tuple(float(m) for m in scores.magnitudes[rows]),
            strategy_tag=tag,
        )

    def random_query(self, unlabeled: Archive, b: int, rng: np.random.Generator) -> QuerySelection:
        """Uniform sample without replacement of min(b, |unlabeled|) ids; scores are 0."""
        self._check_budget(b)
        if unlabeled.N == 0:
            return QuerySelection.empty(StrategyName.RANDOM.value)
        rows = rng.choice(unlabeled.N, size=min(b, unlabeled.N), replace=False)
        ids = tuple(int(i) for i in unlabeled.ids[rows])
        return QuerySelection(selected_ids=ids, scores=(0.0,) * len(ids), strategy_tag=StrategyName.RANDOM.value)

    def mge_query(self, params: ModelParams, unlabeled: Archive, b: int) -> QuerySelection:
        """Top-b samples by MGE magnitude, ties by lowest id."""
        self._check_budget(b)
        if unlabeled.N == 0:
            return QuerySelection.empty(StrategyName.MGE.value)
        scores = self.score(params, unlabeled)
        return self._selection(scores, scores.ranking()[:b], StrategyName.MGE.value)

    def mge_clustering_query(
        self,
        params: ModelParams,
        unlabeled: Archive,
        b: int,
        m: int,
        rng: np.random.Generator,
        max_iter: int = DEFAULT_CLUSTER_MAX_ITER,
        tol: float = DEFAULT_CLUSTER_TOL,
        n_init: int = DEFAULT_CLUSTER_N_INIT,
    ) -> QuerySelection:
        """MGE+Clustering selection.

        The m' = min(m, |U|) most uncertain samples are clustered on their
        penultimate features into b clusters and the most uncertain member of
        each cluster is taken. Slots left by a reduced cluster count are
        filled by global rank among the candidates. The result is ordered by
        rank. When m' <= b this is plain top-b. The clustering keeps the best
        of ``n_init`` seeded restarts.
        """
        self._check_budget(b)
        tag = StrategyName.MGE_CLUSTERING.value
        if unlabeled.N == 0:
            return QuerySelection.empty(tag)

        scores = self.score(params, unlabeled)
        order = scores.ranking()
        m_prime = min(m, unlabeled.N)
        if m_prime <= b:
            return self._selection(scores, order[:b], tag)

        candidates = order[:m_prime]
        clustering = self.cluster_service.cluster(scores.penultimate[candidates], b, rng, max_iter, tol, n_init)

        picked: list[int] = []
        for cluster_index in range(clustering.k):
            members = np.flatnonzero(clustering.assignment == cluster_index)
            if members.size:
                # candidates are in rank order, so the first member is the most uncertain
                picked.append(int(members[0]))

        if len(picked) < b:
            logger.debug(f"Filling {b - len(picked)} slots by rank ({clustering.k} non-empty clusters)")
            taken = set(picked)
            for rank in range(m_prime):
                if len(picked) == b:
                    break
                if rank not in taken:
                    picked.append(rank)

        return self._selection(scores, candidates[sorted(picked)], tag)

    def build_strategy(
        self,
        name: StrategyName | str,
        m_factor: int = DEFAULT_M_FACTOR,
        max_iter: int = DEFAULT_CLUSTER_MAX_ITER,
        tol: float = DEFAULT_CLUSTER_TOL,
        n_init: int = DEFAULT_CLUSTER_N_INIT,
    ) -> QueryStrategy:
        """Build a strategy object by name.

        Raises:
            ConfigurationError: If the name is unknown
        """
        try:
            strategy = StrategyName(name)
        except ValueError:
            raise ConfigurationError(
                f"Unknown strategy {name!r}; expected one of {', '.join(s.value for s in StrategyName)}"
            ) from None

        match strategy:
            case StrategyName.RANDOM:
                return RandomStrategy(self)
            case StrategyName.MGE:
                return MgeStrategy(self)
            case StrategyName.MGE_CLUSTERING:
                return MgeClusteringStrategy(self, m_factor, max_iter, tol, n_init)


class RandomStrategy:
    name = StrategyName.RANDOM.value

    def __init__(self, query_service: QueryService) -> None:
        self.query_service = query_service

    def select(
        self, params: ModelParams, unlabeled: Archive, b: int, rng: np.random.Generator
    ) -> QuerySelection:
        return self.query_service.random_query(unlabeled, b, rng)


class MgeStrategy:
    name = StrategyName.MGE.value

    def __init__(self, query_service: QueryService) -> None:
        self.query_service = query_service

    def select(
        self, params: ModelParams, unlabeled: Archive, b: int, rng: np.random.Generator
    ) -> QuerySelection:
        return self.query_service.mge_query(params, unlabeled, b)


class MgeClusteringStrategy:
    """MGE+Clustering with m = m_factor x b candidates."""

    name = StrategyName.MGE_CLUSTERING.value

    def __init__(
        self, query_service: QueryService, m_factor: int, max_iter: int, tol: float, n_init: int = DEFAULT_CLUSTER_N_INIT
    ) -> None:
        self.query_service = query_service
        self.m_factor = m_factor
        self.max_iter = max_iter
        self.tol = tol
        self.n_init = n_init

    def select(
        self, params: ModelParams, unlabeled: Archive, b: int, rng: np.random.Generator
    ) -> QuerySelection:
        return self.query_service.mge_clustering_query(
            params, unlabeled, b, self.m_factor * b, rng, self.max_iter, self.tol, self.n_init
        )
