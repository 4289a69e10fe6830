"""CLI commands for generating data, pre-training and running experiments."""

import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import NoReturn

import click
from dotenv import load_dotenv
from pydantic import ValidationError

from app import create_container
from app.exceptions import BusinessLogicException, ConfigurationError
from app.schemas.experiment_schema import ExperimentConfig
from app.schemas.metrics_schema import CurveSummary
from app.services.experiment_service import ExperimentOutcome, ExperimentService

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

_HANDLED_ERRORS = (ConfigurationError, BusinessLogicException, ValidationError)


def _parse_seeds(ctx: click.Context, param: click.Parameter, value: str | None) -> list[int] | None:
    if value is None:
        return None
    try:
        seeds = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated list of integers, got {value!r}") from None
    if not seeds:
        raise click.BadParameter("at least one seed is required")
    return seeds


config_option = click.option(
    "--config", "config_path", required=True,
    type=click.Path(path_type=Path, dir_okay=False),
    help="Experiment config document (JSON)",
)
out_option = click.option(
    "--out", type=click.Path(path_type=Path, file_okay=False), default=None,
    help="Output directory (overrides AL_OUTPUT_DIR and the document)",
)
seeds_option = click.option(
    "--seeds", callback=_parse_seeds, default=None,
    help="Comma-separated run seeds (overrides the document)",
)
jobs_option = click.option(
    "--jobs", type=click.IntRange(min=1), default=None,
    help="Concurrent runs (overrides AL_JOBS and the document)",
)


@click.group()
@click.pass_context
def cli(ctx: click.Context) -> None:
    """Pool-based active learning simulator for multi-label classification."""
    ctx.ensure_object(dict)
    try:
        container = create_container()
    except (ConfigurationError, ValidationError) as e:
        _fail(e)
    logging.basicConfig(level=container.config().log_level_value, format=LOG_FORMAT)
    ctx.obj["container"] = container


def _experiment_service(ctx: click.Context) -> ExperimentService:
    service: ExperimentService = ctx.obj["container"].experiment_service()
    return service


@cli.command()
@config_option
@out_option
@click.pass_context
def generate(ctx: click.Context, config_path: Path, out: Path | None) -> None:
    """Write the synthetic dataset described by a config to CSV."""
    handle_generate(_experiment_service(ctx), config_path, out)


@cli.command()
@config_option
@out_option
@click.option(
    "--data", type=click.Path(path_type=Path, dir_okay=False), default=None,
    help="Dataset CSV to pre-train on (replaces the document's data source)",
)
@click.pass_context
def pretrain(ctx: click.Context, config_path: Path, out: Path | None, data: Path | None) -> None:
    """Pre-train an encoder with BYOL and save the checkpoint."""
    handle_pretrain(_experiment_service(ctx), config_path, out, data)


@cli.command()
@config_option
@out_option
@seeds_option
@jobs_option
@click.pass_context
def run(ctx: click.Context, config_path: Path, out: Path | None, seeds: list[int] | None, jobs: int | None) -> None:
    """Run the configured strategy over all scenarios and seeds."""
    handle_run(_experiment_service(ctx), config_path, out, seeds, jobs, compare=False)


@cli.command()
@config_option
@out_option
@seeds_option
@jobs_option
@click.pass_context
def compare(ctx: click.Context, config_path: Path, out: Path | None, seeds: list[int] | None, jobs: int | None) -> None:
    """Run paired strategies and write comparison tables."""
    handle_run(_experiment_service(ctx), config_path, out, seeds, jobs, compare=True)


@cli.command()
@click.option(
    "--out", required=True, type=click.Path(path_type=Path, file_okay=False),
    help="Results directory holding runs/*.jsonl",
)
@click.pass_context
def report(ctx: click.Context, out: Path) -> None:
    """Re-aggregate run files into curves and scenario summaries."""
    handle_report(_experiment_service(ctx), out)


def _describe(error: Exception) -> str:
    if isinstance(error, ValidationError):
        details = "; ".join(
            f"{'.'.join(str(part) for part in item['loc']) or '<root>'}: {item['msg']}"
            for item in error.errors()
        )
        return f"Invalid configuration: {details}"
    return str(error).replace("\n", " ")


def _fail(error: Exception) -> NoReturn:
    print(f"Error: {_describe(error)}", file=sys.stderr)
    sys.exit(1)


def _print_summaries(summaries: Sequence[CurveSummary]) -> None:
    print(f"{'strategy':<16} {'scenario':<14} {'runs':>4} {'final_micro':>11} {'final_macro':>11} {'mean_macro':>10}")
    for summary in summaries:
        final = summary.points[-1]
        print(
            f"{summary.strategy:<16} {summary.scenario:<14} {summary.num_runs:>4} "
            f"{final.micro_f1_mean:>11.4f} {final.macro_f1_mean:>11.4f} "
            f"{summary.mean_macro_f1_over_iterations:>10.4f}"
        )


def handle_generate(service: ExperimentService, config_path: Path, out: Path | None) -> None:
    """Handle generate command."""
    try:
        config = ExperimentConfig.from_file(config_path)
        result = service.generate(config, service.output_dir(config, out))
    except _HANDLED_ERRORS as e:
        _fail(e)

    print(f"Wrote {result.archive.N} samples to {result.path}")
    for name, count in zip(result.archive.class_names, result.class_counts, strict=True):
        print(f"  {name:<16} {count:>7}")


def handle_pretrain(service: ExperimentService, config_path: Path, out: Path | None, data: Path | None) -> None:
    """Handle pretrain command."""
    try:
        config = ExperimentConfig.from_file(config_path)
        if data is not None:
            config = config.model_copy(update={"data_path": data, "synthetic": None})
        out_dir = service.output_dir(config, out)
        result = service.pretrain(config, out_dir)
    except _HANDLED_ERRORS as e:
        _fail(e)

    print(f"Pre-trained encoder for {len(result.epoch_losses)} epochs: "
          f"loss {result.epoch_losses[0]:.4f} -> {result.epoch_losses[-1]:.4f}")
    print(f"Checkpoint written to {out_dir}")


def handle_run(
    service: ExperimentService,
    config_path: Path,
    out: Path | None,
    seeds: list[int] | None,
    jobs: int | None,
    compare: bool,
) -> None:
    """Handle run and compare commands."""
    try:
        config = ExperimentConfig.from_file(config_path)
        out_dir = service.output_dir(config, out)
        outcome: ExperimentOutcome = (
            service.compare(config, out_dir, seeds, jobs) if compare else service.run(config, out_dir, seeds, jobs)
        )
    except _HANDLED_ERRORS as e:
        _fail(e)

    _print_summaries(outcome.summaries)
    print(f"Results written to {outcome.out_dir}")

    if outcome.batch.failures:
        for failure in outcome.batch.failures:
            print(f"Error: {failure.message}", file=sys.stderr)
        sys.exit(1)


def handle_report(service: ExperimentService, out: Path) -> None:
    """Handle report command."""
    try:
        summaries = service.report(out)
    except _HANDLED_ERRORS as e:
        _fail(e)
    _print_summaries(summaries)


def main() -> None:
    """Main CLI entry point."""
    # Load environment variables from .env file if present
    load_dotenv()
    cli()


if __name__ == "__main__":
    main()
