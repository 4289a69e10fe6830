"""Dataset service: synthetic archives, CSV I/O, splits and imbalance scenarios."""

import csv
import itertools
import logging
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from app.exceptions import (
    ConfigurationError,
    DatasetFormatException,
    RecordNotFoundException,
    ScenarioException,
)
from app.models.archive import Archive
from app.schemas.dataset_schema import CooccurrencePair, ScenarioSpec, SyntheticConfig
from app.utils.results_io import fmt

logger = logging.getLogger(__name__)

_FRACTION_TOLERANCE = 1e-9


def default_class_names(num_classes: int) -> list[str]:
    return [f"class_{j}" for j in range(num_classes)]


class DatasetService:
    """Service for building the archives an experiment runs on.

    Every operation is a pure function of its inputs and seed.
    """

    def generate_synthetic(self, config: SyntheticConfig) -> Archive:
        """Generate a synthetic multi-label archive.

        Labels are per-class Bernoulli draws, then every co-occurrence pair
        copies class_a's bit into class_b with probability ``strength``.
        Features are the sum of the prototypes of the present classes plus
        isotropic Gaussian noise.

        Raises:
            ConfigurationError: If priors, pairs or class names do not fit C
        """
        self._validate_synthetic(config)

        num_classes, dim, n = config.num_classes, config.feature_dim, config.num_samples
        priors = np.asarray(config.class_priors, dtype=np.float64)
        rng = np.random.default_rng(config.seed)

        prototypes = rng.standard_normal((num_classes, dim))
        labels = self._draw_labels(rng, priors, config.cooccurrence_pairs, n)

        if not config.allow_empty_labels:
            empty = np.flatnonzero(labels.sum(axis=1) == 0)
            while empty.size:
                redraw = self._draw_labels(rng, priors, config.cooccurrence_pairs, empty.size)
                labels[empty] = redraw
                empty = empty[redraw.sum(axis=1) == 0]

        features = labels.astype(np.float64) @ prototypes
        features += config.noise_std * rng.standard_normal((n, dim))

        archive = Archive(
            ids=np.arange(n, dtype=np.int64),
            features=features,
            labels=labels,
            class_names=tuple(config.class_names or default_class_names(num_classes)),
        )
        logger.info(f"Generated synthetic archive: N={n}, d={dim}, C={num_classes}")
        return archive

    def _validate_synthetic(self, config: SyntheticConfig) -> None:
        errors: list[str] = []
        num_classes = config.num_classes

        if len(config.class_priors) != num_classes:
            errors.append(f"class_priors must have {num_classes} entries (got {len(config.class_priors)})")
        if any(not 0.0 <= prior <= 1.0 for prior in config.class_priors):
            errors.append("class_priors must lie in [0, 1]")
        if not config.allow_empty_labels and config.num_samples > 0 and not any(config.class_priors):
            errors.append("all class_priors are zero but empty label vectors are not allowed")
        for pair in config.cooccurrence_pairs:
            if pair.class_a >= num_classes or pair.class_b >= num_classes:
                errors.append(f"co-occurrence pair ({pair.class_a}, {pair.class_b}) out of range")
            elif pair.class_a == pair.class_b:
                errors.append(f"co-occurrence pair ({pair.class_a}, {pair.class_b}) couples a class to itself")
        if config.class_names is not None and len(config.class_names) != num_classes:
            errors.append(f"class_names must have {num_classes} entries (got {len(config.class_names)})")

        if errors:
            raise ConfigurationError("Synthetic config validation failed:\n  - " + "\n  - ".join(errors))

    @staticmethod
    def _draw_labels(
        rng: np.random.Generator,
        priors: NDArray[np.float64],
        pairs: list[CooccurrencePair],
        n: int,
    ) -> NDArray[np.int8]:
        labels = (rng.random((n, priors.shape[0])) < priors).astype(np.int8)
        for pair in pairs:
            couple = rng.random(n) < pair.strength
            labels[couple, pair.class_b] = labels[couple, pair.class_a]
        return labels

    def write_csv(self, archive: Archive, path: Path) -> None:
        """Write ``id,f0..,y0..`` rows; features keep 9 significant digits."""
        path.parent.mkdir(parents=True, exist_ok=True)
        header = ["id"] + [f"f{i}" for i in range(archive.d)] + [f"y{j}" for j in range(archive.C)]
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for sample_id, features, labels in zip(archive.ids, archive.features, archive.labels, strict=True):
                writer.writerow(
                    [int(sample_id)] + [fmt(float(x)) for x in features] + [int(y) for y in labels]
                )
        logger.info(f"Wrote {archive.N} samples to {path}")

    def load_csv(self, path: Path) -> Archive:
        """Read a dataset CSV. Ids are assigned by row order.

        Data rows are numbered from 1 in error messages (the header is row 0).

        Raises:
            RecordNotFoundException: If the file does not exist
            DatasetFormatException: On a bad header, ragged row or bad cell
        """
        if not path.is_file():
            raise RecordNotFoundException("Dataset file", str(path))

        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None:
                raise DatasetFormatException(0, None, "missing header")
            dim, num_classes = self._parse_header(header)

            features: list[list[float]] = []
            labels: list[list[int]] = []
            for row_number, row in enumerate(reader, start=1):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DatasetFormatException(
                        row_number, None, f"expected {len(header)} cells, got {len(row)}"
                    )
                features.append(
                    [self._parse_feature(row_number, header[col], row[col]) for col in range(1, 1 + dim)]
                )
                labels.append(
                    [self._parse_label(row_number, header[col], row[col]) for col in range(1 + dim, len(header))]
                )

        n = len(features)
        archive = Archive(
            ids=np.arange(n, dtype=np.int64),
            features=np.asarray(features, dtype=np.float64).reshape(n, dim),
            labels=np.asarray(labels, dtype=np.int8).reshape(n, num_classes),
            class_names=tuple(default_class_names(num_classes)),
        )
        logger.info(f"Loaded {path}: N={n}, d={dim}, C={num_classes}")
        return archive

    @staticmethod
    def _parse_header(header: list[str]) -> tuple[int, int]:
        if not header or header[0] != "id":
            raise DatasetFormatException(0, header[0] if header else None, "first column must be 'id'")

        feature_cols = [name for name in header[1:] if name.startswith("f")]
        dim = len(feature_cols)
        num_classes = len(header) - 1 - dim
        expected = ["id"] + [f"f{i}" for i in range(dim)] + [f"y{j}" for j in range(num_classes)]
        for name, want in zip(header, expected, strict=True):
            if name != want:
                raise DatasetFormatException(0, name, f"expected column {want!r}")
        if dim == 0:
            raise DatasetFormatException(0, None, "no feature columns")
        if num_classes == 0:
            raise DatasetFormatException(0, None, "no label columns")
        return dim, num_classes

    @staticmethod
    def _parse_feature(row: int, column: str, cell: str) -> float:
        try:
            value = float(cell)
        except ValueError:
            raise DatasetFormatException(row, column, f"not a decimal number: {cell!r}") from None
        if not np.isfinite(value):
            raise DatasetFormatException(row, column, f"non-finite feature value {cell!r}")
        return value

    @staticmethod
    def _parse_label(row: int, column: str, cell: str) -> int:
        if cell not in ("0", "1"):
            raise DatasetFormatException(row, column, f"label must be 0 or 1 (got {cell!r})")
        return int(cell)

    def split(
        self, archive: Archive, fractions: tuple[float, float, float], seed: int
    ) -> tuple[Archive, Archive, Archive]:
        """Partition into (pool, val, test) by rounded shares; the pool takes the remainder.

        Raises:
            ConfigurationError: If fractions are negative or do not sum to 1
        """
        if len(fractions) != 3 or any(f < 0.0 for f in fractions):
            raise ConfigurationError(f"split fractions must be three nonnegative values (got {fractions})")
        if abs(sum(fractions) - 1.0) > _FRACTION_TOLERANCE:
            raise ConfigurationError(f"split fractions must sum to 1 (got {sum(fractions)})")

        n = archive.N
        _, val_fraction, test_fraction = fractions
        n_val = min(n, int(np.floor(n * val_fraction + 0.5)))
        n_test = min(n - n_val, int(np.floor(n * test_fraction + 0.5)))

        order = np.random.default_rng(seed).permutation(n)
        val = np.sort(order[:n_val])
        test = np.sort(order[n_val:n_val + n_test])
        pool = np.sort(order[n_val + n_test:])

        logger.info(f"Split {n} samples into pool={pool.size}, val={val.size}, test={test.size}")
        return archive.take(pool), archive.take(val), archive.take(test)

    def resolve_minority_classes(
        self, spec: ScenarioSpec, num_classes: int, rng: np.random.Generator | None = None
    ) -> list[int]:
        """Return the minority classes of a scenario, drawing them when requested.

        Random selection is uniform over all candidate subsets of the requested
        size that violate no exclusion pair.

        Raises:
            ScenarioException: If the classes are invalid or no valid draw exists
        """
        if spec.random_minority_count is None:
            classes = list(spec.minority_classes)
        else:
            if spec.minority_classes:
                raise ScenarioException("Give either minority_classes or random_minority_count, not both")
            candidates = sorted(set(spec.minority_candidates or range(num_classes)))
            options = [
                list(combo)
                for combo in itertools.combinations(candidates, spec.random_minority_count)
                if not self._excluded_pair(combo, spec.exclusion_pairs)
            ]
            if not options:
                raise ScenarioException(
                    f"No choice of {spec.random_minority_count} classes from {candidates} avoids the exclusion pairs"
                )
            if rng is None:
                rng = np.random.default_rng(spec.seed)
            classes = options[int(rng.integers(len(options)))]

        out_of_range = [j for j in classes if not 0 <= j < num_classes]
        if out_of_range:
            raise ScenarioException(f"Minority classes {out_of_range} out of range for C={num_classes}")
        if len(set(classes)) != len(classes):
            raise ScenarioException(f"Minority classes {classes} contain duplicates")
        violated = self._excluded_pair(classes, spec.exclusion_pairs)
        if violated is not None:
            raise ScenarioException(f"Minority classes {classes} contain excluded pair {violated}")
        return classes

    @staticmethod
    def _excluded_pair(
        classes: tuple[int, ...] | list[int], pairs: list[tuple[int, int]]
    ) -> tuple[int, int] | None:
        chosen = set(classes)
        for a, b in pairs:
            if a in chosen and b in chosen:
                return (a, b)
        return None

    def apply_scenario(self, pool: Archive, spec: ScenarioSpec) -> Archive:
        """Remove ``remove_per_class`` samples containing each minority class.

        Classes are processed in order; each draw is uniform without
        replacement among the samples still present that contain the class.

        Raises:
            ScenarioException: If a class has too few samples or an exclusion pair is violated
        """
        rng = np.random.default_rng(spec.seed)
        classes = self.resolve_minority_classes(spec, pool.C, rng)
        per_class = spec.remove_per_class
        if per_class == 0 or not classes:
            return pool

        frequencies = self.class_frequencies(pool)
        for j in classes:
            if frequencies[j] < per_class:
                raise ScenarioException(
                    f"Class {j} appears in {frequencies[j]} pool samples, cannot remove {per_class}"
                )

        remaining = np.ones(pool.N, dtype=bool)
        for j in classes:
            candidates = np.flatnonzero(remaining & (pool.labels[:, j] == 1))
            if candidates.size < per_class:
                raise ScenarioException(
                    f"Class {j} has {candidates.size} samples left after earlier removals, cannot remove {per_class}"
                )
            remaining[rng.choice(candidates, size=per_class, replace=False)] = False

        result = pool.take(np.flatnonzero(remaining))
        logger.info(f"Scenario removed {pool.N - result.N} samples for minority classes {classes}")
        return result

    def class_frequencies(self, archive: Archive) -> NDArray[np.int64]:
        return archive.labels.sum(axis=0, dtype=np.int64)
