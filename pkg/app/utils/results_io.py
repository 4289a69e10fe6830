"""Result file readers and writers.

Payload files carry no timestamps so that reruns with the same seeds are
byte-identical.
"""

import csv
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

from pydantic import TypeAdapter

from app.consts import CSV_FLOAT_FORMAT
from app.exceptions import RecordNotFoundException
from app.schemas.engine_schema import RunHistory, RunRecordLine
from app.schemas.metrics_schema import CurveSummary

logger = logging.getLogger(__name__)

RUNS_DIR = "runs"
SUMMARY_FILE = "summary.json"
CURVES_FILE = "curves.csv"
COMPARISON_FILE = "comparison.csv"
SCENARIO_SUMMARY_FILE = "scenario_summary.csv"
PRETRAIN_LOSS_FILE = "pretrain_loss.csv"

_SUMMARIES = TypeAdapter(list[CurveSummary])


def fmt(value: float) -> str:
    return format(value, CSV_FLOAT_FORMAT)


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_run_history(out_dir: Path, history: RunHistory) -> Path:
    """Write ``runs/<run_id>.jsonl``, one JSON object per iteration record."""
    path = out_dir / RUNS_DIR / f"{history.run_id}.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [RunRecordLine.from_record(history, record).model_dump_json() for record in history.records]
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    return path


def read_run_histories(out_dir: Path) -> list[RunHistory]:
    """Read every run file under ``runs/``, ordered by file name.

    Raises:
        RecordNotFoundException: If the directory holds no run files
    """
    paths = sorted((out_dir / RUNS_DIR).glob("*.jsonl"))
    if not paths:
        raise RecordNotFoundException("Run results directory", str(out_dir / RUNS_DIR))

    histories: list[RunHistory] = []
    for path in paths:
        lines = [
            RunRecordLine.model_validate_json(text)
            for text in path.read_text(encoding="utf-8").splitlines()
            if text.strip()
        ]
        if not lines:
            logger.warning(f"Skipping empty run file {path.name}")
            continue
        first = lines[0]
        histories.append(
            RunHistory(
                run_id=first.run_id,
                strategy=first.strategy,
                scenario=first.scenario,
                seed=first.seed,
                records=[line.to_record() for line in lines],
            )
        )
    return histories


def write_summary_json(path: Path, summaries: Sequence[CurveSummary]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_SUMMARIES.dump_json(list(summaries), indent=2) + b"\n")


def write_curves_csv(path: Path, summaries: Sequence[CurveSummary]) -> None:
    """Plot-ready long format: one row per (strategy, scenario, checkpoint, metric)."""
    rows: list[list[object]] = []
    for summary in summaries:
        for point in summary.points:
            rows.append([summary.strategy, summary.scenario, point.labeled_count, "micro_f1",
                         fmt(point.micro_f1_mean), fmt(point.micro_f1_std)])
            rows.append([summary.strategy, summary.scenario, point.labeled_count, "macro_f1",
                         fmt(point.macro_f1_mean), fmt(point.macro_f1_std)])
    _write_rows(path, ("strategy", "scenario", "labeled_count", "metric", "mean", "std"), rows)


def write_comparison_csv(path: Path, summaries: Sequence[CurveSummary]) -> None:
    rows = [
        [summary.strategy, summary.scenario, point.labeled_count,
         fmt(point.micro_f1_mean), fmt(point.macro_f1_mean)]
        for summary in summaries
        for point in summary.points
    ]
    _write_rows(path, ("strategy", "scenario", "labeled_count", "micro_f1_mean", "macro_f1_mean"), rows)


def write_scenario_summary_csv(path: Path, summaries: Sequence[CurveSummary]) -> None:
    rows = [
        [summary.strategy, summary.scenario, fmt(summary.mean_macro_f1_over_iterations)]
        for summary in summaries
    ]
    _write_rows(path, ("strategy", "scenario", "mean_macro_f1"), rows)


def write_loss_csv(path: Path, losses: Sequence[float]) -> None:
    _write_rows(path, ("epoch", "loss"), ([epoch, fmt(loss)] for epoch, loss in enumerate(losses)))
