"""CSV reports and console tables for evaluation runs."""

import csv
from pathlib import Path
from typing import Dict, List, Tuple, Union

from rich.table import Table

from .scoring import RunResult, format_far, format_latency, format_sensitivity


SUBJECT_COLUMNS = ["subject", "n_seizures", "n_detected", "false_alarms", "mean_latency_s", "hours"]
SUMMARY_ROWS = [
    "Seizures detected",
    "Sensitivity (%)",
    "False alarms",
    "FAR (fp/h)",
    "Mean latency (s)",
    "Runs (mode of)",
]


def summary_values(result: RunResult) -> List[str]:
    """Printed values in SUMMARY_ROWS order."""
    return [
        f"{result.n_detected}/{result.n_seizures}",
        format_sensitivity(result.sensitivity),
        str(result.false_alarms),
        format_far(result.far),
        format_latency(result.mean_latency_s),
        str(result.n_runs),
    ]


def _open_csv(path: Union[str, Path]):
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    return open(out, "w", encoding="utf-8", newline="")


def write_subject_csv(result: RunResult, path: Union[str, Path]) -> None:
    """One row per subject; the summary is recomputable from these rows."""
    with _open_csv(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUBJECT_COLUMNS)
        for subject in sorted(result.per_subject):
            score = result.per_subject[subject]
            latency = score.mean_latency_s
            writer.writerow([
                subject,
                score.n_seizures,
                score.n_detected,
                score.false_alarm_events,
                "" if latency is None else repr(latency),
                repr(score.recording_hours),
            ])


def write_summary_csv(columns: Dict[str, RunResult], path: Union[str, Path]) -> None:
    """``metric,<setting>...`` with the SUMMARY_ROWS row set."""
    names = list(columns)
    values = [summary_values(columns[name]) for name in names]
    with _open_csv(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["metric"] + names)
        for row_idx, row_name in enumerate(SUMMARY_ROWS):
            writer.writerow([row_name] + [v[row_idx] for v in values])


def write_latency_csv(result: RunResult, path: Union[str, Path]) -> None:
    """Every detected seizure's latency, for per-subject plots."""
    with _open_csv(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["subject", "latency_s"])
        for subject in sorted(result.per_subject):
            for latency in result.per_subject[subject].latencies_s:
                writer.writerow([subject, repr(latency)])


def results_table(columns: Dict[str, RunResult], title: str = "Performance") -> Table:
    """Rich table: SUMMARY_ROWS, one column per setting."""
    table = Table(title=title)
    table.add_column("Metric", style="cyan")
    for name in columns:
        table.add_column(name, justify="right")
    values = [summary_values(r) for r in columns.values()]
    for row_idx, row_name in enumerate(SUMMARY_ROWS):
        table.add_row(row_name, *[v[row_idx] for v in values])
    return table


def subject_table(result: RunResult) -> Table:
    table = Table(title="Per subject")
    for column in ("Subject", "Detected", "False alarms", "Mean latency (s)"):
        table.add_column(column, justify="right" if column != "Subject" else "left")
    for subject in sorted(result.per_subject):
        score = result.per_subject[subject]
        table.add_row(
            subject,
            f"{score.n_detected}/{score.n_seizures}",
            str(score.false_alarm_events),
            format_latency(score.mean_latency_s),
        )
    return table


def write_run_reports(name: str, result: RunResult, out_dir: Union[str, Path]) -> Tuple[Path, Path]:
    """``<name>_subjects.csv`` and ``<name>_summary.csv`` under ``out_dir``."""
    out = Path(out_dir)
    subjects_path = out / f"{name}_subjects.csv"
    summary_path = out / f"{name}_summary.csv"
    write_subject_csv(result, subjects_path)
    write_summary_csv({name: result}, summary_path)
    write_latency_csv(result, out / f"{name}_latencies.csv")
    return subjects_path, summary_path
