"""Base seizure detector abstract class."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..pipeline.epoching import Epoch, WindowingPolicy
from ..utils.errors import ChannelError


class BaseDetector(ABC):
    """Abstract base class for epoch-level seizure detectors."""

    name = "base"

    def __init__(self, n_channels: int):
        """Initialize the detector.

        Args:
            n_channels: Channels each epoch must have
        """
        self.n_channels = n_channels

    @abstractmethod
    def fit(self, epochs: Sequence[Epoch], on_epoch: Optional[Callable] = None) -> "BaseDetector":
        """Train on labeled epochs.

        Args:
            epochs: Training epochs of both classes
            on_epoch: Progress callback for iterative trainers

        Returns:
            The fitted detector
        """
        pass

    @abstractmethod
    def decision(self, epochs: Sequence[Epoch]) -> np.ndarray:
        """Per-epoch detector output (probability or margin score)."""
        pass

    @abstractmethod
    def is_ictal(self, scores: np.ndarray) -> np.ndarray:
        """Threshold decision outputs into boolean ictal flags."""
        pass

    def flag(self, epochs: Sequence[Epoch]) -> np.ndarray:
        """Boolean ictal decision per epoch."""
        return self.is_ictal(self.decision(epochs))

    @abstractmethod
    def save(self, path: Union[str, Path]) -> None:
        """Write the fitted model to a file."""
        pass

    @property
    @abstractmethod
    def is_deterministic(self) -> bool:
        """True if refitting on the same data always gives the same model."""
        pass

    @abstractmethod
    def training_policy(self, base: WindowingPolicy) -> WindowingPolicy:
        """Train-mode windowing this detector expects."""
        pass

    def check_channels(self, epochs: Sequence[Epoch]) -> None:
        """Raise if any epoch's channel count differs from the detector's."""
        for epoch in epochs:
            if epoch.n_channels != self.n_channels:
                raise ChannelError(
                    f"{self.name} detector expects {self.n_channels} channels, "
                    f"epoch of {epoch.subject_id} at {epoch.start_s:g} s has {epoch.n_channels}"
                )
