"""Experiment orchestration behind the CLI commands.

Result directory layout::

    <out>/dataset.csv              generate
    <out>/encoder.json             pretrain (role pretrained-encoder)
    <out>/pretrain_loss.csv        pretrain
    <out>/runs/<run_id>.jsonl      run / compare, one record per iteration
    <out>/summary.json             run / compare
    <out>/curves.csv               run / compare / report
    <out>/comparison.csv           compare
    <out>/scenario_summary.csv     compare / report
    <out>/metrics.prom             run / compare (operational, not a payload)
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from app.config import Settings
from app.exceptions import ConfigurationError
from app.models.archive import Archive
from app.models.network import DenseBlock
from app.schemas.engine_schema import RunHistory, StrategyName
from app.schemas.experiment_schema import ExperimentConfig
from app.schemas.metrics_schema import CurveSummary
from app.services.classifier_service import ClassifierService
from app.services.dataset_service import DatasetService
from app.services.engine_service import ActiveLearningRunTask, ActiveLearningService
from app.services.evaluation_service import EvaluationService
from app.services.metrics_service import MetricsService
from app.services.pretrain_service import PretrainResult, PretrainService
from app.services.run_service import RunBatch, RunService
from app.utils.results_io import (
    COMPARISON_FILE,
    CURVES_FILE,
    PRETRAIN_LOSS_FILE,
    SCENARIO_SUMMARY_FILE,
    SUMMARY_FILE,
    read_run_histories,
    write_comparison_csv,
    write_curves_csv,
    write_loss_csv,
    write_run_history,
    write_scenario_summary_csv,
    write_summary_json,
)

logger = logging.getLogger(__name__)

DATASET_FILE = "dataset.csv"
ENCODER_FILE = "encoder.json"


@dataclass
class Splits:
    pool: Archive
    val: Archive
    test: Archive


@dataclass
class GenerateResult:
    path: Path
    archive: Archive
    class_counts: list[int]


@dataclass
class ExperimentOutcome:
    """Aggregated curves plus the raw batch (including any failed runs)."""

    out_dir: Path
    summaries: list[CurveSummary] = field(default_factory=list)
    batch: RunBatch = field(default_factory=RunBatch)


def run_id_for(strategy: str, scenario: str, seed: int) -> str:
    return f"{strategy}__{scenario}__seed{seed}"


class ExperimentService:
    """Service wiring datasets, pre-training, runs and result files together."""

    def __init__(
        self,
        settings: Settings,
        dataset_service: DatasetService,
        classifier_service: ClassifierService,
        pretrain_service: PretrainService,
        al_service: ActiveLearningService,
        evaluation_service: EvaluationService,
        run_service: RunService,
        metrics_service: MetricsService,
    ) -> None:
        self.settings = settings
        self.dataset_service = dataset_service
        self.classifier_service = classifier_service
        self.pretrain_service = pretrain_service
        self.al_service = al_service
        self.evaluation_service = evaluation_service
        self.run_service = run_service
        self.metrics_service = metrics_service

    def output_dir(self, config: ExperimentConfig, flag: Path | None = None) -> Path:
        return self.settings.resolve_output_dir(flag, config.output_dir)

    def load_archive(self, config: ExperimentConfig) -> Archive:
        if config.synthetic is not None:
            return self.dataset_service.generate_synthetic(config.synthetic)
        assert config.data_path is not None
        return self.dataset_service.load_csv(config.data_path)

    def prepare_splits(self, config: ExperimentConfig) -> Splits:
        archive = self.load_archive(config)
        pool, val, test = self.dataset_service.split(archive, config.split.fractions, config.split.seed)
        return Splits(pool=pool, val=val, test=test)

    def generate(self, config: ExperimentConfig, out_dir: Path) -> GenerateResult:
        """Write the synthetic archive described by the document to ``dataset.csv``."""
        if config.synthetic is None:
            raise ConfigurationError("generate needs a 'synthetic' section in the experiment config")
        archive = self.dataset_service.generate_synthetic(config.synthetic)
        path = out_dir / DATASET_FILE
        self.dataset_service.write_csv(archive, path)
        counts = [int(c) for c in self.dataset_service.class_frequencies(archive)]
        return GenerateResult(path=path, archive=archive, class_counts=counts)

    def pretrain(self, config: ExperimentConfig, out_dir: Path) -> PretrainResult:
        """Pre-train an encoder on the pool features and save checkpoint and loss curve."""
        splits = self.prepare_splits(config)
        result = self.pretrain_service.pretrain(splits.pool, config.ssl)
        self.classifier_service.save_encoder(result.encoder, out_dir / ENCODER_FILE)
        write_loss_csv(out_dir / PRETRAIN_LOSS_FILE, result.epoch_losses)
        return result

    def resolve_encoder(self, config: ExperimentConfig, out_dir: Path, splits: Splits) -> DenseBlock | None:
        """Encoder for runs that use pre-training.

        Order: ``encoder_path`` from the document, then ``<out>/encoder.json``,
        else pre-train now and save to ``<out>/encoder.json``.
        """
        if not config.al.use_pretrained_encoder:
            return None
        if config.encoder_path is not None:
            return self.classifier_service.load_encoder(config.encoder_path)
        default_path = out_dir / ENCODER_FILE
        if default_path.is_file():
            logger.info(f"Using pre-trained encoder {default_path}")
            return self.classifier_service.load_encoder(default_path)

        logger.info("No pre-trained encoder found; pre-training one now")
        result = self.pretrain_service.pretrain(splits.pool, config.ssl)
        self.classifier_service.save_encoder(result.encoder, default_path)
        write_loss_csv(out_dir / PRETRAIN_LOSS_FILE, result.epoch_losses)
        return result.encoder

    def build_tasks(
        self,
        config: ExperimentConfig,
        splits: Splits,
        strategies: Sequence[StrategyName],
        seeds: Sequence[int],
        encoder: DenseBlock | None,
    ) -> list[ActiveLearningRunTask]:
        """One task per (scenario, strategy, seed); runs of one seed share the initial set."""
        tasks: list[ActiveLearningRunTask] = []
        for scenario in config.scenarios:
            pool = self.dataset_service.apply_scenario(splits.pool, scenario.spec)
            for strategy in strategies:
                for seed in seeds:
                    al_config = config.al.model_copy(update={"strategy": strategy, "seed": seed})
                    tasks.append(
                        ActiveLearningRunTask(
                            run_id=run_id_for(strategy.value, scenario.name, seed),
                            service=self.al_service,
                            pool=pool,
                            val=splits.val,
                            test=splits.test,
                            config=al_config,
                            scenario=scenario.name,
                            encoder=encoder,
                        )
                    )
        return tasks

    def summarize(self, histories: Sequence[RunHistory]) -> list[CurveSummary]:
        """Aggregate per (strategy, scenario), groups sorted by name."""
        groups: dict[tuple[str, str], list[RunHistory]] = {}
        for history in histories:
            groups.setdefault((history.strategy, history.scenario), []).append(history)
        return [
            self.evaluation_service.aggregate(sorted(groups[key], key=lambda h: h.seed))
            for key in sorted(groups)
        ]

    def _execute(
        self,
        config: ExperimentConfig,
        out_dir: Path,
        strategies: Sequence[StrategyName],
        seeds: Sequence[int] | None,
        jobs: int | None,
    ) -> ExperimentOutcome:
        seed_list = list(seeds) if seeds else list(config.seeds)
        workers = self.settings.resolve_jobs(jobs, config.jobs)

        splits = self.prepare_splits(config)
        encoder = self.resolve_encoder(config, out_dir, splits)
        tasks = self.build_tasks(config, splits, strategies, seed_list, encoder)
        batch = self.run_service.run_many(tasks, jobs=workers)

        for history in batch.histories:
            write_run_history(out_dir, history)
        summaries = self.summarize(batch.histories)
        if summaries:
            write_summary_json(out_dir / SUMMARY_FILE, summaries)
            write_curves_csv(out_dir / CURVES_FILE, summaries)
        self.metrics_service.write_textfile(out_dir)
        return ExperimentOutcome(out_dir=out_dir, summaries=summaries, batch=batch)

    def run(
        self,
        config: ExperimentConfig,
        out_dir: Path,
        seeds: Sequence[int] | None = None,
        jobs: int | None = None,
    ) -> ExperimentOutcome:
        """Run the document's configured strategy over every scenario and seed."""
        return self._execute(config, out_dir, [config.al.strategy], seeds, jobs)

    def compare(
        self,
        config: ExperimentConfig,
        out_dir: Path,
        seeds: Sequence[int] | None = None,
        jobs: int | None = None,
    ) -> ExperimentOutcome:
        """Paired runs of every listed strategy; writes the comparison tables too."""
        strategies = list(dict.fromkeys(config.strategies))
        if not strategies:
            raise ConfigurationError("compare needs at least one strategy")
        outcome = self._execute(config, out_dir, strategies, seeds, jobs)
        if outcome.summaries:
            write_comparison_csv(out_dir / COMPARISON_FILE, outcome.summaries)
            write_scenario_summary_csv(out_dir / SCENARIO_SUMMARY_FILE, outcome.summaries)
        return outcome

    def report(self, out_dir: Path) -> list[CurveSummary]:
        """Re-aggregate the run files of a results directory."""
        summaries = self.summarize(read_run_histories(out_dir))
        write_curves_csv(out_dir / CURVES_FILE, summaries)
        write_scenario_summary_csv(out_dir / SCENARIO_SUMMARY_FILE, summaries)
        return summaries
