"""Event scoring, leave-one-subject-out runs and reports."""

from .loso import LosoEvaluator, derive_seed, loso_run
from .reports import results_table, write_run_reports, write_subject_csv, write_summary_csv
from .scoring import (
    EpochPrediction,
    EventScore,
    FoldRecord,
    RunResult,
    aggregate,
    mode_of_runs,
    score_events,
)

__all__ = [
    "EpochPrediction",
    "EventScore",
    "FoldRecord",
    "LosoEvaluator",
    "RunResult",
    "aggregate",
    "derive_seed",
    "loso_run",
    "mode_of_runs",
    "results_table",
    "score_events",
    "write_run_reports",
    "write_subject_csv",
    "write_summary_csv",
]
