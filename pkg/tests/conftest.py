"""Pytest configuration and fixtures."""

from pathlib import Path

import numpy as np
import pytest

from app.config import Settings
from app.models.archive import Archive
from app.schemas.dataset_schema import ScenarioSpec, SyntheticConfig
from app.schemas.engine_schema import ALConfig, StrategyName
from app.schemas.experiment_schema import ExperimentConfig, NamedScenario
from app.schemas.training_schema import ByolConfig, TrainConfig
from app.services.classifier_service import ClassifierService
from app.services.cluster_service import ClusterService
from app.services.container import ServiceContainer
from app.services.dataset_service import DatasetService
from app.services.engine_service import ActiveLearningService
from app.services.evaluation_service import EvaluationService
from app.services.experiment_service import ExperimentService
from app.services.pretrain_service import PretrainService
from app.services.query_service import QueryService
from app.services.run_service import RunService


@pytest.fixture
def test_settings(tmp_path: Path) -> Settings:
    """Settings for tests: results under tmp_path, one worker."""
    return Settings(
        output_dir=tmp_path / "results",
        jobs=1,
        log_level="DEBUG",
        metrics_textfile_enabled=True,
    )


@pytest.fixture
def container(test_settings: Settings) -> ServiceContainer:
    """Service container wired with the test settings."""
    container = ServiceContainer()
    container.config.override(test_settings)
    return container


@pytest.fixture
def dataset_service(container: ServiceContainer) -> DatasetService:
    return container.dataset_service()


@pytest.fixture
def classifier_service(container: ServiceContainer) -> ClassifierService:
    return container.classifier_service()


@pytest.fixture
def cluster_service(container: ServiceContainer) -> ClusterService:
    return container.cluster_service()


@pytest.fixture
def pretrain_service(container: ServiceContainer) -> PretrainService:
    return container.pretrain_service()


@pytest.fixture
def query_service(container: ServiceContainer) -> QueryService:
    return container.query_service()


@pytest.fixture
def evaluation_service(container: ServiceContainer) -> EvaluationService:
    return container.evaluation_service()


@pytest.fixture
def al_service(container: ServiceContainer) -> ActiveLearningService:
    return container.al_service()


@pytest.fixture
def run_service(container: ServiceContainer) -> RunService:
    return container.run_service()


@pytest.fixture
def experiment_service(container: ServiceContainer) -> ExperimentService:
    return container.experiment_service()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def small_synthetic_config() -> SyntheticConfig:
    """Three classes, one of them rare, in a 4-dimensional feature space."""
    return SyntheticConfig(
        num_classes=3,
        feature_dim=4,
        num_samples=160,
        class_priors=[0.5, 0.4, 0.15],
        noise_std=0.3,
        seed=3,
    )


@pytest.fixture
def small_archive(dataset_service: DatasetService, small_synthetic_config: SyntheticConfig) -> Archive:
    return dataset_service.generate_synthetic(small_synthetic_config)


@pytest.fixture
def small_splits(dataset_service: DatasetService, small_archive: Archive) -> tuple[Archive, Archive, Archive]:
    """(pool, val, test) = (80, 40, 40) samples."""
    return dataset_service.split(small_archive, (0.5, 0.25, 0.25), seed=0)


@pytest.fixture
def fast_train_config() -> TrainConfig:
    return TrainConfig(epochs=3, batch_size=10, learning_rate=0.05, lr_decay_epoch=2, seed=0)


@pytest.fixture
def fast_al_config(fast_train_config: TrainConfig) -> ALConfig:
    """M=10, b=5, B=15 on a tiny network; finishes in a few hundred SGD steps."""
    return ALConfig(
        initial_labeled=10,
        per_iteration_budget=5,
        total_budget=15,
        strategy=StrategyName.MGE_CLUSTERING,
        m_factor=3,
        hidden_sizes=[6],
        train=fast_train_config,
        seed=0,
    )


@pytest.fixture
def quick_config(small_synthetic_config: SyntheticConfig) -> ExperimentConfig:
    """Two scenarios, two seeds, two strategies; every run acquires 10 labels."""
    return ExperimentConfig(
        synthetic=small_synthetic_config,
        scenarios=[
            NamedScenario(name="scenario_1"),
            NamedScenario(name="scenario_2", spec=ScenarioSpec(minority_classes=[2], remove_per_class=2)),
        ],
        al=ALConfig(
            initial_labeled=10,
            per_iteration_budget=5,
            total_budget=10,
            strategy=StrategyName.RANDOM,
            hidden_sizes=[6],
            train=TrainConfig(epochs=2, batch_size=10, learning_rate=0.05, lr_decay_epoch=1),
        ),
        ssl=ByolConfig(hidden_sizes=[6], epochs=3, batch_size=40),
        strategies=[StrategyName.RANDOM, StrategyName.MGE_CLUSTERING],
        seeds=[0, 1],
    )
