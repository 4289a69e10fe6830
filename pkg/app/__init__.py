"""Pool-based active learning simulator for multi-label classification."""

import logging

from app.config import Settings
from app.services.container import ServiceContainer

logger = logging.getLogger(__name__)


def create_container(settings: Settings | None = None) -> ServiceContainer:
    """Create the service container.

    Loads settings from the environment when none are given and validates
    them before any service is built.

    Raises:
        ConfigurationError: If the settings are invalid
    """
    if settings is None:
        settings = Settings.load()

    settings.validate_config()

    container = ServiceContainer()
    container.config.override(settings)
    logger.debug(f"Service container created (output_dir={settings.output_dir}, jobs={settings.jobs})")
    return container
