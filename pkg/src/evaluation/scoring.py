"""Event-based scoring: sensitivity, false-alarm rate and detection latency."""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..eeg.recording import AnnotationSet
from ..pipeline.epoching import EPOCH_LEN_S
from ..utils.errors import DataContractError


TIME_EPS = 1e-6


@dataclass(frozen=True)
class EpochPrediction:
    """Detector decision for one eval-tiling window."""

    start_s: float
    end_s: float
    flagged: bool

    def __post_init__(self):
        if abs((self.end_s - self.start_s) - EPOCH_LEN_S) > TIME_EPS:
            raise DataContractError(
                f"Prediction [{self.start_s}, {self.end_s}) is not {EPOCH_LEN_S:g} s long"
            )


@dataclass
class EventScore:
    """Seizure-event outcome of one subject.

    Attributes:
        n_seizures: Annotated seizures
        n_detected: Seizures with at least one overlapping flagged epoch
        false_alarm_events: Runs of consecutive flagged non-seizure epochs
        latencies_s: Onset-to-decision delay of every detected seizure
        recording_hours: Recording duration in hours
    """

    n_seizures: int
    n_detected: int
    false_alarm_events: int
    latencies_s: List[float] = field(default_factory=list)
    recording_hours: float = 0.0

    def __post_init__(self):
        if not 0 <= self.n_detected <= self.n_seizures:
            raise DataContractError(f"n_detected {self.n_detected} outside [0, {self.n_seizures}]")
        if len(self.latencies_s) != self.n_detected:
            raise DataContractError("One latency per detected seizure is required")
        bad = [lat for lat in self.latencies_s if not lat > 0]
        if bad:
            raise DataContractError(f"Latencies must be > 0 s, got {bad}")

    @property
    def key(self):
        return (self.n_detected, self.false_alarm_events)

    @property
    def mean_latency_s(self) -> Optional[float]:
        return sum(self.latencies_s) / len(self.latencies_s) if self.latencies_s else None


@dataclass
class FoldRecord:
    """Which subjects trained the model that scored ``held_out``."""

    held_out: str
    train_subjects: List[str]
    n_train_epochs: int


@dataclass
class RunResult:
    """Per-subject scores; the aggregate rates are always derived from them."""

    per_subject: Dict[str, EventScore]
    folds: List[FoldRecord] = field(default_factory=list)
    n_runs: int = 1

    @property
    def n_seizures(self) -> int:
        return sum(s.n_seizures for s in self.per_subject.values())

    @property
    def n_detected(self) -> int:
        return sum(s.n_detected for s in self.per_subject.values())

    @property
    def false_alarms(self) -> int:
        return sum(s.false_alarm_events for s in self.per_subject.values())

    @property
    def hours(self) -> float:
        return sum(s.recording_hours for s in self.per_subject.values())

    @property
    def sensitivity(self) -> float:
        """Detected share of all seizures, in percent."""
        return 100.0 * self.n_detected / self.n_seizures

    @property
    def far(self) -> float:
        """False-alarm events per recording hour."""
        return self.false_alarms / self.hours if self.hours > 0 else 0.0

    @property
    def mean_latency_s(self) -> Optional[float]:
        latencies = [lat for s in self.per_subject.values() for lat in s.latencies_s]
        return sum(latencies) / len(latencies) if latencies else None


def _check_tiling(preds: Sequence[EpochPrediction]) -> None:
    for prev, cur in zip(preds, preds[1:]):
        if abs(cur.start_s - prev.end_s) > TIME_EPS:
            raise DataContractError(
                f"Predictions must tile time in order: [{prev.start_s}, {prev.end_s}) "
                f"is followed by [{cur.start_s}, {cur.end_s})"
            )


def score_events(preds: Sequence[EpochPrediction], ann: AnnotationSet, duration_s: float) -> EventScore:
    """Score one subject's eval-tiling decisions against its seizures.

    A seizure counts as detected if any flagged epoch overlaps it; its latency
    is the end of the earliest such epoch minus the onset. Flagged epochs that
    overlap no seizure form false-alarm events, one per maximal run of
    consecutive windows.

    Raises:
        DataContractError: Predictions out of order or not contiguous
    """
    preds = list(preds)
    _check_tiling(preds)

    def overlaps(p: EpochPrediction, onset: float, offset: float) -> bool:
        return p.start_s < offset and p.end_s > onset

    latencies = []
    for onset, offset in ann:
        hits = [p for p in preds if p.flagged and overlaps(p, onset, offset)]
        if hits:
            latencies.append(hits[0].end_s - onset)

    false_alarms = 0
    in_run = False
    for p in preds:
        is_false = p.flagged and not any(overlaps(p, on, off) for on, off in ann)
        if is_false and not in_run:
            false_alarms += 1
        in_run = is_false

    return EventScore(
        n_seizures=len(ann),
        n_detected=len(latencies),
        false_alarm_events=false_alarms,
        latencies_s=latencies,
        recording_hours=duration_s / 3600.0,
    )


def alarm_events(preds: Sequence[EpochPrediction]) -> List[Tuple[float, float]]:
    """(start_s, end_s) of every maximal run of consecutive flagged epochs."""
    events: List[Tuple[float, float]] = []
    for p in preds:
        if not p.flagged:
            continue
        if events and abs(events[-1][1] - p.start_s) <= TIME_EPS:
            events[-1] = (events[-1][0], p.end_s)
        else:
            events.append((p.start_s, p.end_s))
    return events


def aggregate(scores: Dict[str, EventScore], folds: Optional[List[FoldRecord]] = None) -> RunResult:
    """Pool per-subject scores into one run.

    Raises:
        DataContractError: No subjects, or no seizures at all
    """
    if not scores:
        raise DataContractError("Cannot aggregate an empty set of subject scores")
    if sum(s.n_seizures for s in scores.values()) == 0:
        raise DataContractError("Cannot compute sensitivity: the subjects contain zero seizures")
    return RunResult(per_subject=dict(scores), folds=list(folds or []))


def mode_of_runs(results: Sequence[Dict[str, EventScore]]) -> Dict[str, EventScore]:
    """Most frequent (n_detected, false alarms) outcome per subject across repeats.

    Ties go to fewer false alarms, then fewer detections. The returned score
    is the first repeat that produced the winning pair, so its latencies are
    real ones.
    """
    if not results:
        return {}
    chosen = {}
    for subject in results[0]:
        runs = [r[subject] for r in results]
        counts = Counter(score.key for score in runs)
        best = min(counts, key=lambda k: (-counts[k], k[1], k[0]))
        chosen[subject] = next(score for score in runs if score.key == best)
    return chosen


def truncate_1dp(value: float) -> float:
    return math.floor(value * 10.0 + 1e-9) / 10.0


def format_sensitivity(value: float) -> str:
    """Sensitivity truncated to one decimal (104/120 -> '86.6')."""
    return f"{truncate_1dp(value):.1f}"


def format_far(value: float) -> str:
    return f"{value:.2f}"


def format_latency(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.2f}"
