"""KMeans++ seeding and Lloyd refinement."""

import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.consts import DEFAULT_CLUSTER_MAX_ITER, DEFAULT_CLUSTER_N_INIT, DEFAULT_CLUSTER_TOL
from app.exceptions import ConfigurationError, DimensionMismatchException
from app.models.network import FloatArray
from app.models.selection import Clustering

logger = logging.getLogger(__name__)


def _as_points(points: ArrayLike) -> FloatArray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchException("points rank", 2, x.ndim)
    return x


def squared_distances(points: FloatArray, centroids: FloatArray) -> FloatArray:
    """(n, k) matrix of squared Euclidean distances."""
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def assign(points: FloatArray, centroids: FloatArray) -> tuple[NDArray[np.int64], FloatArray]:
    """Nearest-centroid assignment (ties to the lowest index) and each point's squared distance."""
    dist = squared_distances(points, centroids)
    assignment = np.argmin(dist, axis=1).astype(np.int64)
    return assignment, dist[np.arange(points.shape[0]), assignment]


class ClusterService:
    """Service for clustering feature vectors into exactly-k groups."""

    def kmeanspp_seed(self, points: ArrayLike, k: int, rng: np.random.Generator) -> FloatArray:
        """Pick k initial centroids with D^2 weighting.

        The first centroid is uniform over the points. Each next one is drawn
        with probability proportional to the squared distance to the nearest
        centroid chosen so far.

        Raises:
            ConfigurationError: If k < 1 or k exceeds the number of points
        """
        x = _as_points(points)
        n = x.shape[0]
        if not 1 <= k <= n:
            raise ConfigurationError(f"k must lie in [1, {n}] (got {k})")

        chosen = [int(rng.integers(n))]
        nearest = np.sum((x - x[chosen[0]]) ** 2, axis=1)
        for _ in range(1, k):
            cumulative = np.cumsum(nearest)
            total = cumulative[-1]
            if total <= 0.0:
                # only duplicates of chosen centroids remain
                index = int(rng.integers(n))
            else:
                index = int(np.searchsorted(cumulative, rng.random() * total, side="right"))
                if index >= n:
                    index = int(np.flatnonzero(nearest > 0.0)[-1])
            chosen.append(index)
            nearest = np.minimum(nearest, np.sum((x - x[index]) ** 2, axis=1))
        return x[chosen].copy()

    def lloyd(
        self,
        points: ArrayLike,
        centroids: ArrayLike,
        max_iter: int = DEFAULT_CLUSTER_MAX_ITER,
        tol: float = DEFAULT_CLUSTER_TOL,
        k_requested: int | None = None,
    ) -> Clustering:
        """Alternate mean updates and nearest-centroid assignment.

        Stops once the largest centroid displacement drops below ``tol`` or
        after ``max_iter`` updates. An empty cluster is reseeded to the point
        farthest from its (updated) centroid.
        """
        if max_iter < 0 or tol < 0.0:
            raise ConfigurationError(f"max_iter and tol must be nonnegative (got {max_iter}, {tol})")
        x = _as_points(points)
        current = np.array(centroids, dtype=np.float64, copy=True)
        if current.ndim != 2 or current.shape[1] != x.shape[1]:
            raise DimensionMismatchException("centroid shape", (current.shape[0], x.shape[1]), current.shape)
        k = current.shape[0]
        if k < 1:
            raise ConfigurationError("lloyd needs at least one centroid")

        assignment, dist = assign(x, current)
        history = [float(dist.sum())]
        n_iter = 0
        for _ in range(max_iter):
            updated = current.copy()
            counts = np.bincount(assignment, minlength=k)
            for j in np.flatnonzero(counts):
                updated[j] = x[assignment == j].mean(axis=0)

            empty = np.flatnonzero(counts == 0)
            if empty.size:
                spread = np.sum((x - updated[assignment]) ** 2, axis=1)
                for j in empty:
                    far = int(np.argmax(spread))
                    if spread[far] <= 0.0:
                        break
                    updated[j] = x[far]
                    spread[far] = -np.inf
                logger.debug(f"Reseeded {empty.size} empty clusters")

            shift = float(np.max(np.linalg.norm(updated - current, axis=1)))
            current = updated
            assignment, dist = assign(x, current)
            history.append(float(dist.sum()))
            n_iter += 1
            if shift < tol:
                break

        return Clustering(
            centroids=current,
            assignment=assignment,
            k_requested=k if k_requested is None else k_requested,
            wcss_history=tuple(history),
            n_iter=n_iter,
        )

    def cluster(
        self,
        points: ArrayLike,
        k: int,
        rng: np.random.Generator,
        max_iter: int = DEFAULT_CLUSTER_MAX_ITER,
        tol: float = DEFAULT_CLUSTER_TOL,
        n_init: int = DEFAULT_CLUSTER_N_INIT,
    ) -> Clustering:
        """KMeans++ seeding followed by Lloyd iterations, best of ``n_init`` restarts.

        Each restart seeds and refines from its own child stream of ``rng``;
        the lowest final WCSS wins, the earliest restart on ties. When the
        input holds fewer distinct points than ``k``, k is reduced to the
        distinct count and the result reports the reduction.
        """
        x = _as_points(points)
        if not 1 <= k <= x.shape[0]:
            raise ConfigurationError(f"k must lie in [1, {x.shape[0]}] (got {k})")
        if n_init < 1:
            raise ConfigurationError(f"n_init must be at least 1 (got {n_init})")

        distinct = int(np.unique(x, axis=0).shape[0])
        effective = min(k, distinct)
        if effective < k:
            logger.warning(f"Only {distinct} distinct points; reducing k from {k} to {effective}")

        restarts = [
            self.lloyd(x, self.kmeanspp_seed(x, effective, child), max_iter, tol, k_requested=k)
            for child in rng.spawn(n_init)
        ]
        best = min(restarts, key=lambda clustering: clustering.wcss)
        logger.debug(f"Best of {n_init} restarts: WCSS {best.wcss:.6g}")
        return best
