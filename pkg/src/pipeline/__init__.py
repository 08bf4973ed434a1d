"""Preprocessing and epoching stages."""

from .epoching import (
    EPOCH_LEN_S,
    EPOCH_SAMPLES,
    Epoch,
    EpochingAgent,
    Label,
    WindowingPolicy,
    class_counts,
    extract_epochs,
    stack_epochs,
)
from .preprocessing import SignalProcessor, resample_to_200, select_channels, znormalize

__all__ = [
    "EPOCH_LEN_S",
    "EPOCH_SAMPLES",
    "Epoch",
    "EpochingAgent",
    "Label",
    "SignalProcessor",
    "WindowingPolicy",
    "class_counts",
    "extract_epochs",
    "resample_to_200",
    "select_channels",
    "stack_epochs",
    "znormalize",
]
