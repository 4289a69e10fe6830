"""Archive model: the sample pool and its labeled/unlabeled subsets."""

from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from app.exceptions import DatasetFormatException, DimensionMismatchException

# Binary presence/absence vector over the C classes of an archive.
MultiLabelVector = NDArray[np.int8]


def _frozen(array: NDArray[np.generic]) -> NDArray[np.generic]:
    copy = np.array(array, copy=True)
    copy.setflags(write=False)
    return copy


@dataclass(frozen=True)
class Sample:
    """A single archive entry. ``labels`` stay hidden from the learner until oracle-labeled."""

    id: int
    features: NDArray[np.float64]
    labels: MultiLabelVector


@dataclass(frozen=True, eq=False)
class Archive:
    """Ordered, immutable collection of samples stored column-wise.

    ``features`` is (N, d), ``labels`` is (N, C) with entries in {0, 1} and
    ``ids`` holds the stable sample ids. Archives derived by split or
    scenario removal keep the ids of their parent archive.
    """

    ids: NDArray[np.int64]
    features: NDArray[np.float64]
    labels: MultiLabelVector
    class_names: tuple[str, ...]

    def __post_init__(self) -> None:
        ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)

        if features.ndim != 2:
            raise DimensionMismatchException("archive features rank", 2, features.ndim)
        if labels.ndim != 2:
            raise DimensionMismatchException("archive labels rank", 2, labels.ndim)
        if features.shape[0] != ids.shape[0] or labels.shape[0] != ids.shape[0]:
            raise DimensionMismatchException(
                "archive row count", ids.shape[0], (features.shape[0], labels.shape[0])
            )
        if labels.shape[1] != len(self.class_names):
            raise DimensionMismatchException("archive class count", len(self.class_names), labels.shape[1])
        if labels.size and not np.isin(labels, (0, 1)).all():
            row = int(np.argwhere(~np.isin(labels, (0, 1)))[0][0])
            raise DatasetFormatException(row, None, "labels must be 0 or 1")
        if np.unique(ids).shape[0] != ids.shape[0]:
            raise DatasetFormatException(0, "id", "sample ids must be unique")

        object.__setattr__(self, "ids", _frozen(ids))
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int8)))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @classmethod
    def empty(cls, d: int, class_names: Sequence[str]) -> "Archive":
        """Create an archive with no samples but a fixed feature/class layout."""
        return cls(
            ids=np.zeros(0, dtype=np.int64),
            features=np.zeros((0, d), dtype=np.float64),
            labels=np.zeros((0, len(class_names)), dtype=np.int8),
            class_names=tuple(class_names),
        )

    @property
    def N(self) -> int:
        return int(self.ids.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def C(self) -> int:
        return len(self.class_names)

    def __len__(self) -> int:
        return self.N

    def __iter__(self) -> Iterator[Sample]:
        for position in range(self.N):
            yield self.sample_at(position)

    def sample_at(self, position: int) -> Sample:
        return Sample(
            id=int(self.ids[position]),
            features=self.features[position],
            labels=self.labels[position],
        )

    def positions_of(self, ids: Sequence[int] | NDArray[np.int64]) -> NDArray[np.int64]:
        """Map sample ids to row positions.

        Raises:
            KeyError: If an id is not part of this archive
        """
        lookup = {int(sample_id): position for position, sample_id in enumerate(self.ids)}
        return np.array([lookup[int(sample_id)] for sample_id in ids], dtype=np.int64)

    def take(self, positions: Sequence[int] | NDArray[np.int64]) -> "Archive":
        """Sub-archive of the given row positions, in the given order."""
        index = np.asarray(positions, dtype=np.int64)
        return Archive(
            ids=self.ids[index],
            features=self.features[index],
            labels=self.labels[index],
            class_names=self.class_names,
        )
