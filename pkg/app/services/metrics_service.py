"""Prometheus textfile export of the operational counters."""

import logging
from pathlib import Path

from prometheus_client import REGISTRY, CollectorRegistry, write_to_textfile

from app.config import Settings

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.prom"


class MetricsService:
    """Thin export service for the process's Prometheus collectors.

    All Prometheus metric *definitions* and *recording logic* live in the
    services that publish them (module-level Counter / Histogram objects).
    MetricsService does NOT define or wrap any metrics itself; it only writes
    the registry in textfile-collector format after a command finishes.
    """

    def __init__(self, settings: Settings, registry: CollectorRegistry = REGISTRY) -> None:
        self.settings = settings
        self.registry = registry

    def write_textfile(self, out_dir: Path) -> Path | None:
        """Write ``<out_dir>/metrics.prom``; returns None when the export is disabled."""
        if not self.settings.metrics_textfile_enabled:
            logger.debug("Metrics textfile export disabled")
            return None

        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / METRICS_FILE
        write_to_textfile(str(path), self.registry)
        logger.debug(f"Wrote metrics textfile {path}")
        return path
