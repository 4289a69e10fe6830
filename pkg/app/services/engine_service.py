"""Active learning engine: initial set, fine-tune, evaluate, query, label."""

import logging
import time
from collections.abc import Sequence

import numpy as np
from prometheus_client import Counter, Histogram

from app.exceptions import (
    ConfigurationError,
    DimensionMismatchException,
    ProtocolException,
    RecordNotFoundException,
)
from app.models.archive import Archive
from app.models.network import DenseBlock, ModelParams
from app.schemas.engine_schema import ALConfig, IterationRecord, RunHistory
from app.services.base_task import BaseRunTask, ProgressHandle
from app.services.classifier_service import ClassifierService
from app.services.evaluation_service import EvaluationService
from app.services.pretrain_service import PretrainService
from app.services.query_service import QueryService, QueryStrategy
from app.utils.seeding import Stream, derive_seed, make_rng

AL_ITERATIONS_TOTAL = Counter(
    "al_iterations_total",
    "Active learning query iterations completed",
    ["strategy"],
)
AL_LABELS_ACQUIRED_TOTAL = Counter(
    "al_labels_acquired_total",
    "Labels acquired by query strategies (initial sets excluded)",
    ["strategy"],
)
AL_FINE_TUNE_SECONDS = Histogram(
    "al_fine_tune_seconds",
    "Wall time of one fine-tuning pass",
)

logger = logging.getLogger(__name__)


class LabelingOracle:
    """Simulated annotator owning the labeled/unlabeled partition of one pool.

    Labeling reveals ground truth. The labeled set keeps acquisition order;
    the unlabeled set keeps pool order.
    """

    def __init__(self, pool: Archive) -> None:
        self.pool = pool
        self._labeled = np.zeros(pool.N, dtype=bool)
        self._acquired: list[int] = []

    @property
    def labeled_count(self) -> int:
        return len(self._acquired)

    @property
    def unlabeled_count(self) -> int:
        return self.pool.N - self.labeled_count

    @property
    def labeled(self) -> Archive:
        return self.pool.take(self._acquired)

    @property
    def unlabeled(self) -> Archive:
        return self.pool.take(np.flatnonzero(~self._labeled))

    def is_labeled(self, sample_id: int) -> bool:
        return bool(self._labeled[self.pool.positions_of([sample_id])[0]])

    def label(self, ids: Sequence[int]) -> Archive:
        """Reveal features and true labels of ``ids`` and move them to the labeled set.

        Raises:
            RecordNotFoundException: If an id is not in the pool
            ProtocolException: If an id is labeled twice
        """
        if len(ids) == 0:
            return Archive.empty(self.pool.d, self.pool.class_names)
        if len(set(ids)) != len(ids):
            raise ProtocolException(f"Duplicate ids in labeling request {list(ids)}")
        try:
            positions = self.pool.positions_of(ids)
        except KeyError as e:
            raise RecordNotFoundException("Pool sample", e.args[0]) from None

        already = [int(self.pool.ids[p]) for p in positions if self._labeled[p]]
        if already:
            raise ProtocolException(f"Samples {already} are already labeled")

        self._labeled[positions] = True
        self._acquired.extend(int(p) for p in positions)
        return self.pool.take(positions)


class ActiveLearningService:
    """Service running one active learning protocol end to end."""

    def __init__(
        self,
        classifier_service: ClassifierService,
        pretrain_service: PretrainService,
        query_service: QueryService,
        evaluation_service: EvaluationService,
    ) -> None:
        self.classifier_service = classifier_service
        self.pretrain_service = pretrain_service
        self.query_service = query_service
        self.evaluation_service = evaluation_service

    def initial_labeled_ids(self, pool: Archive, config: ALConfig) -> list[int]:
        """Uniform draw of M pool ids; depends only on the seed, never on the strategy."""
        rng = make_rng(config.seed, Stream.INITIAL_SET)
        rows = rng.choice(pool.N, size=config.initial_labeled, replace=False)
        return [int(pool.ids[row]) for row in rows]

    def initial_params(
        self, d: int, num_classes: int, config: ALConfig, encoder: DenseBlock | None = None
    ) -> ModelParams:
        if config.use_pretrained_encoder:
            if encoder is None:
                raise ConfigurationError("use_pretrained_encoder is set but no pre-trained encoder was given")
            return self.pretrain_service.transfer(
                encoder, num_classes, derive_seed(config.seed, Stream.HEAD), input_dim=d, hidden_sizes=config.hidden_sizes
            )
        return self.classifier_service.init_params(
            d, config.hidden_sizes, num_classes, derive_seed(config.seed, Stream.INIT_PARAMS), config.activation
        )

    def build_strategy(self, config: ALConfig) -> QueryStrategy:
        return self.query_service.build_strategy(
            config.strategy, config.m_factor, config.cluster_max_iter, config.cluster_tol, config.cluster_n_init
        )

    def run_al(
        self,
        pool: Archive,
        val: Archive,
        test: Archive,
        config: ALConfig,
        *,
        encoder: DenseBlock | None = None,
        strategy: QueryStrategy | None = None,
        run_id: str | None = None,
        scenario: str = "scenario_1",
        progress: ProgressHandle | None = None,
    ) -> RunHistory:
        """Run the protocol until B labels beyond the initial M are acquired.

        Each iteration fine-tunes from the previous iteration's parameters,
        evaluates on ``test``, then queries and labels up to b new samples.
        The final record is the evaluation after the last acquisition. The
        validation split is not used by the engine.

        Raises:
            ConfigurationError: If the pool cannot hold M + B samples
            TrainingDivergedException: If fine-tuning diverges (carries the iteration)
            ProtocolException: If a strategy returns the wrong number of ids
        """
        del val
        m_initial, b, total = config.initial_labeled, config.per_iteration_budget, config.total_budget
        if pool.N < m_initial + total:
            raise ConfigurationError(
                f"Pool holds {pool.N} samples but the protocol needs M + B = {m_initial + total}"
            )
        if test.d != pool.d or test.C != pool.C:
            raise DimensionMismatchException("test archive layout", (pool.d, pool.C), (test.d, test.C))

        if strategy is None:
            strategy = self.build_strategy(config)
        run_id = run_id or f"{strategy.name}__{scenario}__seed{config.seed}"

        oracle = LabelingOracle(pool)
        oracle.label(self.initial_labeled_ids(pool, config))
        params = self.initial_params(pool.d, pool.C, config, encoder)
        query_rng = make_rng(config.seed, Stream.QUERY)

        logger.info(f"Run {run_id}: pool={pool.N}, M={m_initial}, b={b}, B={total}, strategy={strategy.name}")

        records: list[IterationRecord] = []
        acquired = 0
        iteration = 0
        while True:
            train_config = config.train.model_copy(
                update={"seed": derive_seed(config.seed, Stream.FINE_TUNE, config.train.seed, iteration)}
            )
            started = time.perf_counter()
            params = self.classifier_service.train(params, oracle.labeled, train_config, iteration)
            AL_FINE_TUNE_SECONDS.observe(time.perf_counter() - started)

            result = self.evaluation_service.evaluate(params, test)
            logger.info(
                f"Run {run_id} iteration {iteration}: labeled={oracle.labeled_count} "
                f"micro_f1={result.micro_f1:.4f} macro_f1={result.macro_f1:.4f}"
            )

            budget = min(b, total - acquired, oracle.unlabeled_count)
            selected_ids: list[int] = []
            selected_scores: list[float] = []
            if budget > 0:
                if budget < b:
                    logger.warning(f"Run {run_id} iteration {iteration}: final query truncated to {budget} labels")
                selection = strategy.select(params, oracle.unlabeled, budget, query_rng)
                if len(selection) != budget:
                    raise ProtocolException(
                        f"Strategy {strategy.name} returned {len(selection)} ids, expected {budget}"
                    )
                oracle.label(selection.selected_ids)
                selected_ids = list(selection.selected_ids)
                selected_scores = list(selection.scores)
                logger.debug(f"Run {run_id} iteration {iteration}: selected {selected_ids}")

            records.append(
                IterationRecord(
                    iteration=iteration,
                    labeled_count=oracle.labeled_count - len(selected_ids),
                    selected_ids=selected_ids,
                    selected_scores=selected_scores,
                    micro_f1=result.micro_f1,
                    macro_f1=result.macro_f1,
                    per_class_f1=[float(f) for f in result.per_class_f1],
                )
            )
            if not selected_ids:
                break

            acquired += len(selected_ids)
            AL_ITERATIONS_TOTAL.labels(strategy=strategy.name).inc()
            AL_LABELS_ACQUIRED_TOTAL.labels(strategy=strategy.name).inc(len(selected_ids))
            if progress is not None:
                progress.send_progress(f"{run_id}: {acquired}/{total} labels", acquired / total)
            iteration += 1

        logger.info(f"Run {run_id} finished: {oracle.labeled_count} labeled, final macro_f1={records[-1].macro_f1:.4f}")
        return RunHistory(
            run_id=run_id,
            strategy=strategy.name,
            scenario=scenario,
            seed=config.seed,
            records=records,
            final_params=params,
        )


class ActiveLearningRunTask(BaseRunTask):
    """One (strategy, scenario, seed) run over prepared splits."""

    def __init__(
        self,
        run_id: str,
        service: ActiveLearningService,
        pool: Archive,
        val: Archive,
        test: Archive,
        config: ALConfig,
        scenario: str,
        encoder: DenseBlock | None = None,
    ) -> None:
        super().__init__(run_id)
        self.service = service
        self.pool = pool
        self.val = val
        self.test = test
        self.config = config
        self.scenario = scenario
        self.encoder = encoder

    def execute(self, progress_handle: ProgressHandle) -> RunHistory:
        return self.service.run_al(
            self.pool,
            self.val,
            self.test,
            self.config,
            encoder=self.encoder,
            run_id=self.run_id,
            scenario=self.scenario,
            progress=progress_handle,
        )
