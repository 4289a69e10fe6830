"""Dependency injection container for the active learning simulator."""

from dependency_injector import containers, providers

from app.config import Settings
from app.services.classifier_service import ClassifierService
from app.services.cluster_service import ClusterService
from app.services.dataset_service import DatasetService
from app.services.engine_service import ActiveLearningService
from app.services.evaluation_service import EvaluationService
from app.services.experiment_service import ExperimentService
from app.services.metrics_service import MetricsService
from app.services.pretrain_service import PretrainService
from app.services.query_service import QueryService
from app.services.run_service import RunService


class ServiceContainer(containers.DeclarativeContainer):
    """Container for service dependency injection."""

    # Configuration providers
    config = providers.Dependency(instance_of=Settings)

    # Stateless numerical services
    dataset_service = providers.Singleton(DatasetService)
    classifier_service = providers.Singleton(ClassifierService)
    cluster_service = providers.Singleton(ClusterService)
    pretrain_service = providers.Singleton(PretrainService)

    query_service = providers.Singleton(
        QueryService,
        classifier_service=classifier_service,
        cluster_service=cluster_service,
    )
    evaluation_service = providers.Singleton(
        EvaluationService,
        classifier_service=classifier_service,
        query_service=query_service,
    )

    # Active learning engine
    al_service = providers.Singleton(
        ActiveLearningService,
        classifier_service=classifier_service,
        pretrain_service=pretrain_service,
        query_service=query_service,
        evaluation_service=evaluation_service,
    )

    # Run executor - bounded thread pool over independent runs
    run_service = providers.Singleton(
        RunService,
        max_workers=config.provided.resolve_jobs.call(),
    )

    # Metrics service - Prometheus textfile export
    metrics_service = providers.Singleton(MetricsService, settings=config)

    # Experiment orchestration used by the CLI commands
    experiment_service = providers.Factory(
        ExperimentService,
        settings=config,
        dataset_service=dataset_service,
        classifier_service=classifier_service,
        pretrain_service=pretrain_service,
        al_service=al_service,
        evaluation_service=evaluation_service,
        run_service=run_service,
        metrics_service=metrics_service,
    )
