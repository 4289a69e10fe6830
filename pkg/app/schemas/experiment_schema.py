"""Experiment document schema read by the CLI.

A single JSON document describes the data source, split, imbalance
scenarios, the active learning protocol, pre-training and the seed list.
Every section rejects unknown keys.
"""

from pathlib import Path
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.exceptions import RecordNotFoundException
from app.schemas.dataset_schema import ScenarioSpec, SyntheticConfig
from app.schemas.engine_schema import ALConfig, StrategyName
from app.schemas.training_schema import ByolConfig


class SplitConfig(BaseModel):
    """Pool/validation/test fractions and the split seed."""

    model_config = ConfigDict(extra="forbid")

    pool: float = Field(0.5, ge=0.0)
    val: float = Field(0.25, ge=0.0)
    test: float = Field(0.25, ge=0.0)
    seed: int = 0

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.pool, self.val, self.test)


class NamedScenario(BaseModel):
    """An imbalance scenario with the label used in result files."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    spec: ScenarioSpec = Field(default_factory=ScenarioSpec)


def _default_scenarios() -> list[NamedScenario]:
    return [NamedScenario(name="scenario_1")]


class ExperimentConfig(BaseModel):
    """Top-level experiment document."""

    model_config = ConfigDict(extra="forbid")

    synthetic: SyntheticConfig | None = None
    data_path: Path | None = None
    split: SplitConfig = Field(default_factory=SplitConfig)
    scenarios: list[NamedScenario] = Field(default_factory=_default_scenarios)
    al: ALConfig = Field(default_factory=ALConfig)
    ssl: ByolConfig = Field(default_factory=ByolConfig)
    strategies: list[StrategyName] = Field(
        default_factory=lambda: [StrategyName.RANDOM, StrategyName.MGE_CLUSTERING]
    )
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    output_dir: Path | None = None
    encoder_path: Path | None = None
    jobs: int | None = Field(None, ge=1)

    @model_validator(mode="after")
    def _single_data_source(self) -> Self:
        if (self.synthetic is None) == (self.data_path is None):
            raise ValueError("exactly one of 'synthetic' or 'data_path' must be given")
        names = [scenario.name for scenario in self.scenarios]
        if len(set(names)) != len(names):
            raise ValueError("scenario names must be unique")
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        return self

    @model_validator(mode="after")
    def _encoder_widths(self) -> Self:
        if self.al.use_pretrained_encoder and self.encoder_path is None and self.ssl.hidden_sizes != self.al.hidden_sizes:
            raise ValueError(
                f"ssl.hidden_sizes {self.ssl.hidden_sizes} must equal al.hidden_sizes {self.al.hidden_sizes} "
                "when the classifier starts from a pre-trained encoder"
            )
        return self

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentConfig":
        """Read and validate an experiment document.

        Relative ``data_path`` / ``encoder_path`` entries resolve against the
        document's directory.

        Raises:
            RecordNotFoundException: If the file does not exist
            pydantic.ValidationError: If the document is malformed
        """
        if not path.is_file():
            raise RecordNotFoundException("Experiment config", str(path))
        config = cls.model_validate_json(path.read_text(encoding="utf-8"))

        base = path.resolve().parent
        update: dict[str, Path] = {}
        if config.data_path is not None and not config.data_path.is_absolute():
            update["data_path"] = base / config.data_path
        if config.encoder_path is not None and not config.encoder_path.is_absolute():
            update["encoder_path"] = base / config.encoder_path
        return config.model_copy(update=update) if update else config
