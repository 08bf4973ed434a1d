"""Signal preprocessing: resampling, z-normalization, channel selection."""

import logging
from typing import Sequence, Union

import numpy as np
from scipy import signal

from ..eeg.recording import INGEST_RATES_HZ, TARGET_RATE_HZ, Recording
from ..utils.errors import ChannelError, DataContractError


logger = logging.getLogger(__name__)


class SignalProcessor:
    """Stateless recording transforms applied before windowing."""

    @staticmethod
    def resample_to_200(rec: Recording) -> Recording:
        """Bring a recording to 200 Hz.

        500 Hz input is resampled by the rational factor 2/5 (zero-stuff by 2,
        anti-alias FIR at the 100 Hz output Nyquist, decimate by 5); output
        length is floor(n * 2 / 5). 200 Hz input is returned unchanged.

        Args:
            rec: Recording at 200 or 500 Hz

        Returns:
            Recording at 200 Hz

        Raises:
            DataContractError: Unsupported input rate
        """
        if rec.fs_hz not in INGEST_RATES_HZ:
            raise DataContractError(
                f"Cannot resample {rec.subject_id}: {rec.fs_hz} Hz is not 200 or 500 Hz"
            )
        if rec.fs_hz == TARGET_RATE_HZ:
            return rec

        n_out = (rec.n_samples * 2) // 5
        if n_out < 1:
            raise DataContractError(f"Recording {rec.subject_id} too short to resample")
        # padtype="line" keeps constant and linear trends exact at the edges
        resampled = signal.resample_poly(rec.samples, 2, 5, axis=1, padtype="line")
        logger.debug("Resampled %s: %d -> %d samples", rec.subject_id, rec.n_samples, n_out)
        return rec.replace(fs_hz=TARGET_RATE_HZ, samples=resampled[:, :n_out])

    @staticmethod
    def znormalize(rec: Recording) -> Recording:
        """Per-channel zero mean, unit population variance over the recording.

        Raises:
            DataContractError: A channel has zero variance
        """
        mean = rec.samples.mean(axis=1, keepdims=True)
        centered = rec.samples - mean
        std = np.sqrt(np.mean(centered ** 2, axis=1, keepdims=True))

        # constant channels leave only rounding residue after centering
        floor = 1e-12 * np.maximum(1.0, np.abs(mean[:, 0]))
        flat = [name for name, s, f in zip(rec.channel_names, std[:, 0], floor) if not s > f]
        if flat:
            raise DataContractError(
                f"Cannot z-normalize {rec.subject_id}: zero-variance channel(s) {', '.join(flat)}"
            )
        return rec.replace(samples=centered / std)

    @staticmethod
    def select_channels(rec: Recording, names: Sequence[str]) -> Recording:
        """Subset and reorder channels.

        Raises:
            ChannelError: Unknown name; the message lists what is available
        """
        if not names:
            raise ChannelError("No channels requested")
        unknown = [n for n in names if n not in rec.channel_names]
        if unknown:
            raise ChannelError(
                f"Unknown channel(s) {', '.join(unknown)} in {rec.subject_id}; "
                f"available: {', '.join(rec.channel_names)}"
            )
        index = [rec.channel_names.index(n) for n in names]
        return rec.replace(channel_names=list(names), samples=rec.samples[index])

    @classmethod
    def prepare(cls, rec: Recording, channels: Union[str, Sequence[str]] = "all") -> Recording:
        """Resample, select channels and z-normalize in one pass.

        Args:
            rec: Raw recording
            channels: Channel names, or "all" to keep every channel

        Returns:
            Analysis-ready recording
        """
        rec = cls.resample_to_200(rec)
        if channels != "all":
            rec = cls.select_channels(rec, list(channels))
        return cls.znormalize(rec)


resample_to_200 = SignalProcessor.resample_to_200
znormalize = SignalProcessor.znormalize
select_channels = SignalProcessor.select_channels
