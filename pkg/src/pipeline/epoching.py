"""Epoch extraction with asymmetric-stride augmentation."""

import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..eeg.recording import TARGET_RATE_HZ, AnnotationSet, Recording
from ..utils.errors import ConfigError, DataContractError
from .preprocessing import SignalProcessor


logger = logging.getLogger(__name__)

EPOCH_LEN_S = 5.0
EPOCH_SAMPLES = 1000


class Label(IntEnum):
    """Epoch class; the value is the one-hot position."""

    INTERICTAL = 0
    ICTAL = 1


@dataclass
class Epoch:
    """One 5-second window of one subject."""

    subject_id: str
    start_s: float
    data: np.ndarray
    label: Label

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != EPOCH_SAMPLES:
            raise DataContractError(
                f"Epoch data must be (channels x {EPOCH_SAMPLES}), got {self.data.shape}"
            )
        if self.start_s < 0:
            raise DataContractError(f"Epoch start {self.start_s} is negative")

    @property
    def end_s(self) -> float:
        return self.start_s + EPOCH_LEN_S

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]


@dataclass
class WindowingPolicy:
    """How windows are laid over a recording.

    Attributes:
        mode: "train" (label-pure windows, augmented ictal stride) or
            "eval" (contiguous non-overlapping tiling)
        interictal_stride_s: Train-mode stride outside seizures
        ictal_stride_s: Train-mode stride inside seizures
        epoch_len_s: Window length, fixed at 5 s
    """

    mode: str = "train"
    interictal_stride_s: float = 5.0
    ictal_stride_s: float = 0.075
    epoch_len_s: float = EPOCH_LEN_S

    def __post_init__(self):
        if self.mode not in ("train", "eval"):
            raise ConfigError(f"Windowing mode must be 'train' or 'eval', got '{self.mode}'")
        if self.interictal_stride_s <= 0 or self.ictal_stride_s <= 0:
            raise ConfigError("Window strides must be positive")
        if self.epoch_len_s != EPOCH_LEN_S:
            raise ConfigError(f"Epoch length is fixed at {EPOCH_LEN_S} s")

    def stride_samples(self, stride_s: float, fs_hz: float = TARGET_RATE_HZ) -> int:
        """Stride rounded to whole samples (0.075 s -> 15 samples at 200 Hz)."""
        return max(1, int(round(stride_s * fs_hz)))

    @classmethod
    def unaugmented(cls) -> "WindowingPolicy":
        """Train policy with the 5 s stride for both classes."""
        return cls(mode="train", interictal_stride_s=EPOCH_LEN_S, ictal_stride_s=EPOCH_LEN_S)


def _seizure_samples(ann: AnnotationSet, fs_hz: float, n_samples: int) -> List[Tuple[int, int]]:
    bounds = []
    for onset, offset in ann:
        start = int(round(onset * fs_hz))
        stop = min(int(round(offset * fs_hz)), n_samples)
        if stop > start:
            bounds.append((start, stop))
    return bounds


def _is_seizure_mask(bounds: Sequence[Tuple[int, int]], n_samples: int) -> np.ndarray:
    mask = np.zeros(n_samples, dtype=bool)
    for start, stop in bounds:
        mask[start:stop] = True
    return mask


def extract_epochs(rec: Recording, ann: AnnotationSet, policy: WindowingPolicy) -> List[Epoch]:
    """Cut a 200 Hz recording into labeled 5-second epochs.

    Train mode: ictal windows lie wholly inside one seizure and start every
    ``ictal_stride_s`` from its onset; interictal windows touch no seizure
    sample and start every ``interictal_stride_s`` from t=0; straddling
    windows are dropped. Eval mode: non-overlapping windows tile
    [0, floor(duration/5)*5) and are ictal iff they overlap a seizure.

    Args:
        rec: Preprocessed recording at 200 Hz
        ann: Seizure intervals of the recording
        policy: Windowing policy

    Returns:
        Epochs ordered by start time within each class (interictal first in train mode)

    Raises:
        DataContractError: Wrong sampling rate or recording shorter than one epoch
    """
    if rec.fs_hz != TARGET_RATE_HZ:
        raise DataContractError(f"extract_epochs needs 200 Hz input, got {rec.fs_hz} Hz")
    if rec.n_samples < EPOCH_SAMPLES:
        raise DataContractError(
            f"Recording {rec.subject_id} is {rec.duration_s:.2f} s, shorter than one {EPOCH_LEN_S:g} s epoch"
        )

    fs = rec.fs_hz
    bounds = _seizure_samples(ann, fs, rec.n_samples)
    seizure = _is_seizure_mask(bounds, rec.n_samples)
    # cumulative count gives seizure samples in any window in O(1)
    cumulative = np.concatenate([[0], np.cumsum(seizure)])

    def seizure_count(start: int) -> int:
        return int(cumulative[start + EPOCH_SAMPLES] - cumulative[start])

    def make(start: int, label: Label) -> Epoch:
        return Epoch(
            subject_id=rec.subject_id,
            start_s=start / fs,
            data=rec.samples[:, start:start + EPOCH_SAMPLES].copy(),
            label=label,
        )

    last_start = rec.n_samples - EPOCH_SAMPLES
    epochs = []

    if policy.mode == "eval":
        for start in range(0, last_start + 1, EPOCH_SAMPLES):
            label = Label.ICTAL if seizure_count(start) > 0 else Label.INTERICTAL
            epochs.append(make(start, label))
        return epochs

    step = policy.stride_samples(policy.interictal_stride_s, fs)
    for start in range(0, last_start + 1, step):
        if seizure_count(start) == 0:
            epochs.append(make(start, Label.INTERICTAL))

    step = policy.stride_samples(policy.ictal_stride_s, fs)
    for onset, offset in bounds:
        for start in range(onset, offset - EPOCH_SAMPLES + 1, step):
            if seizure_count(start) == EPOCH_SAMPLES:
                epochs.append(make(start, Label.ICTAL))

    return epochs


def class_counts(epochs: Sequence[Epoch]) -> Dict[Label, int]:
    """Number of epochs per label."""
    counts = {Label.INTERICTAL: 0, Label.ICTAL: 0}
    for epoch in epochs:
        counts[epoch.label] += 1
    return counts


def stack_epochs(epochs: Sequence[Epoch]) -> Tuple[np.ndarray, np.ndarray]:
    """Batch array (B, C, 1000) and integer labels (B,)."""
    if not epochs:
        raise DataContractError("No epochs to stack")
    n_channels = {e.n_channels for e in epochs}
    if len(n_channels) != 1:
        raise DataContractError(f"Epochs mix channel counts {sorted(n_channels)}")
    x = np.stack([e.data for e in epochs])
    y = np.array([int(e.label) for e in epochs], dtype=np.int64)
    return x, y


class EpochingAgent:
    """Turns raw subjects into epochs for a detector.

    Combines SignalProcessor.prepare with extract_epochs so callers only pick
    channels and a policy.
    """

    def __init__(self, policy: WindowingPolicy, channels="all"):
        """Initialize epoching agent.

        Args:
            policy: Windowing policy applied to every recording
            channels: Channel names or "all"
        """
        self.policy = policy
        self.channels = channels
        self.processor = SignalProcessor()

    def epochs_for(self, rec: Recording, ann: AnnotationSet) -> List[Epoch]:
        """Prepare one recording and window it."""
        prepared = self.processor.prepare(rec, self.channels)
        return extract_epochs(prepared, ann, self.policy)

    def epochs_for_all(self, dataset: Sequence[Tuple[Recording, AnnotationSet]]) -> List[Epoch]:
        """Epochs of several subjects, concatenated in dataset order."""
        epochs = []
        for rec, ann in dataset:
            subject_epochs = self.epochs_for(rec, ann)
            counts = class_counts(subject_epochs)
            logger.info(
                "%s: %d ictal / %d interictal epochs (%s mode)",
                rec.subject_id, counts[Label.ICTAL], counts[Label.INTERICTAL], self.policy.mode,
            )
            epochs.extend(subject_epochs)
        return epochs
