"""Synthetic absence-seizure EEG generator.

Background is pink-ish noise built from random-phase low-frequency sinusoids
plus an alpha rhythm; seizures are periodic spike-and-wave discharges added on
top of it. Everything is drawn from a seeded numpy Generator, so a config
reproduces its dataset bit-for-bit.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..utils.errors import ConfigError
from .recording import TARGET_RATE_HZ, AnnotationSet, Recording


logger = logging.getLogger(__name__)

# C3/C4 lead so that small synthetic montages contain the default 2-channel pair.
STANDARD_CHANNELS = [
    "C3", "C4", "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8",
    "T3", "Cz", "T4", "T5", "P3", "Pz", "P4", "T6", "O1",
]

SPIKE_WIDTH_S = 0.07


@dataclass
class SynthConfig:
    """Parameters of the synthetic dataset."""

    n_subjects: int = 6
    duration_s: float = 600.0
    n_channels: int = 2
    seizure_count_range: Tuple[int, int] = (3, 5)
    seizure_len_range_s: Tuple[float, float] = (8.0, 15.0)
    spike_wave_hz: float = 3.0
    background_alpha_hz: float = 10.0
    noise_sigma: float = 10.0
    seed: int = 7

    def __post_init__(self):
        self.seizure_count_range = tuple(int(v) for v in self.seizure_count_range)
        self.seizure_len_range_s = tuple(float(v) for v in self.seizure_len_range_s)

        if self.n_subjects < 1:
            raise ConfigError(f"n_subjects must be >= 1, got {self.n_subjects}")
        if self.duration_s <= 0:
            raise ConfigError(f"duration_s must be > 0, got {self.duration_s}")
        if self.n_channels < 1:
            raise ConfigError(f"n_channels must be >= 1, got {self.n_channels}")
        lo, hi = self.seizure_count_range
        if lo < 0 or hi < lo:
            raise ConfigError(f"seizure_count_range {self.seizure_count_range} is empty")
        len_lo, len_hi = self.seizure_len_range_s
        if len_lo <= 0 or len_hi < len_lo:
            raise ConfigError(f"seizure_len_range_s {self.seizure_len_range_s} is empty")
        if self.spike_wave_hz <= 0:
            raise ConfigError(f"spike_wave_hz must be > 0, got {self.spike_wave_hz}")
        if self.noise_sigma <= 0:
            raise ConfigError(f"noise_sigma must be > 0, got {self.noise_sigma}")
        if hi * len_hi > self.duration_s:
            raise ConfigError(
                f"up to {hi} seizures of {len_hi} s do not fit in {self.duration_s} s"
            )

    @property
    def channel_names(self) -> List[str]:
        if self.n_channels <= len(STANDARD_CHANNELS):
            return STANDARD_CHANNELS[: self.n_channels]
        extra = [f"E{i + 1}" for i in range(self.n_channels - len(STANDARD_CHANNELS))]
        return STANDARD_CHANNELS + extra


def pink_background(n_samples: int, fs_hz: float, alpha_hz: float, rng: np.random.Generator) -> np.ndarray:
    """One channel of background activity with unit RMS.

    Sum of random-phase sinusoids on a 0.25 Hz grid from 0.5 to 30 Hz with
    1/f power, a jittered alpha oscillation and a little white noise.
    """
    t = np.arange(n_samples) / fs_hz
    signal = np.zeros(n_samples)

    freqs = np.arange(0.5, 30.0, 0.25)
    freqs = freqs + rng.uniform(-0.1, 0.1, freqs.size)
    phases = rng.uniform(0.0, 2.0 * np.pi, freqs.size)
    amps = 1.0 / np.sqrt(freqs)
    for freq, phase, amp in zip(freqs, phases, amps):
        signal += amp * np.sin(2.0 * np.pi * freq * t + phase)
    signal /= np.std(signal)

    alpha_freq = alpha_hz + rng.uniform(-0.5, 0.5)
    alpha = np.sin(2.0 * np.pi * alpha_freq * t + rng.uniform(0.0, 2.0 * np.pi))
    signal += 0.6 * alpha
    signal += 0.2 * rng.standard_normal(n_samples)

    return signal / np.std(signal)


def spike_wave(n_samples: int, fs_hz: float, rate_hz: float, spike_width_s: float,
               spike_ratio: float, phase: float) -> np.ndarray:
    """Periodic spike-and-wave discharge with unit slow-wave amplitude.

    Each cycle is one biphasic spike (a full sine period of ``spike_width_s``)
    followed by a negative half-sine slow wave filling the rest of the cycle.
    """
    period = 1.0 / rate_hz
    tau = ((np.arange(n_samples) / fs_hz + phase * period) % period)

    out = np.empty(n_samples)
    in_spike = tau < spike_width_s
    out[in_spike] = spike_ratio * np.sin(2.0 * np.pi * tau[in_spike] / spike_width_s)
    wave_len = period - spike_width_s
    out[~in_spike] = -np.sin(np.pi * (tau[~in_spike] - spike_width_s) / wave_len)
    return out


def _place_seizures(n_total: int, lengths: np.ndarray, rng: np.random.Generator) -> List[Tuple[int, int]]:
    free = n_total - int(lengths.sum())
    gaps = rng.dirichlet(np.ones(lengths.size + 1)) * free
    gaps = np.floor(gaps).astype(int)

    placed = []
    cursor = 0
    for gap, length in zip(gaps[:-1], lengths):
        start = cursor + int(gap)
        placed.append((start, start + int(length)))
        cursor = start + int(length)
    return placed


def synth_subject(cfg: SynthConfig, index: int) -> Tuple[Recording, AnnotationSet]:
    """Generate the recording and annotations of subject ``index``."""
    rng = np.random.default_rng([cfg.seed, index])
    fs = TARGET_RATE_HZ
    n_samples = int(round(cfg.duration_s * fs))

    samples = np.stack([
        pink_background(n_samples, fs, cfg.background_alpha_hz, rng) for _ in range(cfg.n_channels)
    ])

    # per-subject morphology jitter
    rate = cfg.spike_wave_hz + rng.uniform(-0.1, 0.1)
    amplitude = rng.uniform(3.0, 6.0)  # slow-wave peak in background RMS units
    spike_width = SPIKE_WIDTH_S * rng.uniform(0.85, 1.15)
    spike_ratio = rng.uniform(0.6, 1.0)

    lo, hi = cfg.seizure_count_range
    n_seizures = int(rng.integers(lo, hi + 1))
    len_lo, len_hi = cfg.seizure_len_range_s
    lengths = np.round(rng.uniform(len_lo, len_hi, n_seizures) * fs).astype(int)

    intervals = []
    for start, stop in _place_seizures(n_samples, lengths, rng):
        discharge = amplitude * spike_wave(
            stop - start, fs, rate, spike_width, spike_ratio, rng.uniform(0.0, 1.0)
        )
        samples[:, start:stop] += discharge[None, :]
        intervals.append((start / fs, stop / fs))

    subject_id = f"S{index + 1:02d}"
    rec = Recording(
        subject_id=subject_id,
        fs_hz=fs,
        channel_names=cfg.channel_names,
        samples=samples * cfg.noise_sigma,
    )
    logger.debug("Synthesized %s with %d seizures", subject_id, len(intervals))
    return rec, AnnotationSet(intervals)


def synth_dataset(cfg: SynthConfig) -> List[Tuple[Recording, AnnotationSet]]:
    """Generate the whole synthetic dataset.

    Args:
        cfg: Generator configuration

    Returns:
        One (Recording, AnnotationSet) pair per subject at 200 Hz
    """
    return [synth_subject(cfg, index) for index in range(cfg.n_subjects)]
