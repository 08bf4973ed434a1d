"""EEG data model: recordings and seizure annotations."""

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import AnnotationError, ShapeError


INGEST_RATES_HZ = (200.0, 500.0)
TARGET_RATE_HZ = 200.0


@dataclass
class Recording:
    """Multichannel EEG recording of one subject.

    Attributes:
        subject_id: Subject identifier
        fs_hz: Sampling rate in samples/second
        channel_names: Ordered channel labels
        samples: Array of shape (n_channels, n_samples)
    """

    subject_id: str
    fs_hz: float
    channel_names: List[str]
    samples: np.ndarray

    def __post_init__(self):
        self.channel_names = list(self.channel_names)
        self.samples = np.asarray(self.samples, dtype=np.float64)

        if self.fs_hz <= 0:
            raise ShapeError(f"Sampling rate must be positive, got {self.fs_hz}")
        if self.samples.ndim != 2:
            raise ShapeError(f"Samples must be 2-D (channels x time), got shape {self.samples.shape}")
        if len(self.channel_names) < 1:
            raise ShapeError("Recording needs at least one channel")
        if self.samples.shape[0] != len(self.channel_names):
            raise ShapeError(
                f"{len(self.channel_names)} channel names for {self.samples.shape[0]} sample rows"
            )
        if self.samples.shape[1] < 1:
            raise ShapeError("Recording needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ShapeError(f"Recording {self.subject_id} contains non-finite samples")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs_hz

    def replace(self, **changes) -> "Recording":
        """Copy of this recording with some fields replaced."""
        fields = {
            "subject_id": self.subject_id,
            "fs_hz": self.fs_hz,
            "channel_names": list(self.channel_names),
            "samples": self.samples,
        }
        fields.update(changes)
        return Recording(**fields)


@dataclass
class AnnotationSet:
    """Sorted, disjoint seizure intervals (seconds) of one recording."""

    intervals: List[Tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.intervals = [(float(on), float(off)) for on, off in self.intervals]
        for onset, offset in self.intervals:
            if onset < 0:
                raise AnnotationError(f"Seizure onset {onset} is negative")
            if offset <= onset:
                raise AnnotationError(f"Seizure interval ({onset}, {offset}) has offset <= onset")
        for (on_a, off_a), (on_b, off_b) in zip(self.intervals, self.intervals[1:]):
            if on_b < on_a:
                raise AnnotationError(f"Seizure intervals not sorted: {on_b} follows {on_a}")
            if on_b < off_a:
                raise AnnotationError(
                    f"Seizure intervals overlap: ({on_a}, {off_a}) and ({on_b}, {off_b})"
                )

    @classmethod
    def from_intervals(
        cls, intervals: Sequence[Tuple[float, float]], duration_s: Optional[float] = None
    ) -> "AnnotationSet":
        """Build a validated set from unsorted intervals.

        Args:
            intervals: (onset_s, offset_s) pairs in any order
            duration_s: Recording duration to bound offsets, if known

        Returns:
            Sorted AnnotationSet
        """
        annotations = cls(sorted((float(a), float(b)) for a, b in intervals))
        if duration_s is not None:
            annotations.check_within(duration_s)
        return annotations

    def check_within(self, duration_s: float) -> None:
        """Raise if any interval ends after the recording."""
        for onset, offset in self.intervals:
            if offset > duration_s + 1e-9:
                raise AnnotationError(
                    f"Seizure interval ({onset}, {offset}) exceeds recording duration {duration_s}"
                )

    def overlap_s(self, start_s: float, end_s: float) -> float:
        """Total seizure time inside [start_s, end_s)."""
        total = 0.0
        for onset, offset in self.intervals:
            total += max(0.0, min(offset, end_s) - max(onset, start_s))
        return total

    def total_seconds(self) -> float:
        return sum(off - on for on, off in self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self) -> Iterator[Tuple[float, float]]:
        return iter(self.intervals)
