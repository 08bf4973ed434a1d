"""Activation maximization: synthesize inputs that drive one filter or output unit.

The objective is the time-averaged pre-ReLU response of the chosen filter
(the batch-norm output of its conv block, running statistics) minus
total-variation and Lp penalties, each divided by the number of pattern
elements. Each step moves a fixed L2 length along the normalized gradient
of the smooth terms, applies the exact total-variation proximal operator
with the matching step weight, and clamps the pattern to the input range.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.signal import periodogram

from ..eeg.recording import TARGET_RATE_HZ
from ..nn.layers import ForwardContext
from ..nn.network import Network
from ..utils.errors import ConfigError, DecodingError


logger = logging.getLogger(__name__)

OUTPUT_LAYER = 5
MIN_FREQ_HZ = 0.5


@dataclass
class AmConfig:
    """Activation-maximization settings.

    Attributes:
        layer_index: Conv block 1-4, or 5 for the output logits
        filter_index: Filter within the block (output unit for layer 5)
        steps: Ascent steps
        step_size: L2 length of each gradient step
        tv_weight: Total-variation penalty weight
        lp_weight: Lp-norm penalty weight
        lp_p: Exponent of the Lp penalty
        input_range: Clamp applied after each step
        seed: Seed of the uniform[-1, 1] starting pattern
    """

    layer_index: int = 4
    filter_index: int = 0
    steps: int = 200
    step_size: float = 0.1
    tv_weight: float = 10.0
    lp_weight: float = 10.0
    lp_p: float = 6.0
    input_range: Tuple[float, float] = (-10.0, 10.0)
    seed: int = 0

    def __post_init__(self):
        self.input_range = tuple(float(v) for v in self.input_range)
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.step_size <= 0:
            raise ConfigError(f"step_size must be > 0, got {self.step_size}")
        if self.tv_weight < 0 or self.lp_weight < 0:
            raise ConfigError("Regularizer weights must be >= 0")
        if self.lp_p < 1:
            raise ConfigError(f"lp_p must be >= 1, got {self.lp_p}")
        low, high = self.input_range
        if not low < high:
            raise ConfigError(f"input_range {self.input_range} is empty")


@dataclass
class AmResult:
    """Best pattern found for one filter."""

    layer_index: int
    filter_index: int
    pattern: np.ndarray
    activation: float
    objective: float
    initial_objective: float
    loss_history: List[float] = field(default_factory=list)
    dominant_hz: List[float] = field(default_factory=list)


def total_variation(pattern: np.ndarray) -> float:
    """Sum over channels of sum_t |x[t+1] - x[t]|."""
    x = np.atleast_2d(pattern)
    return float(np.abs(np.diff(x, axis=-1)).sum())


def lp_norm(pattern: np.ndarray, p: float) -> float:
    """(sum |x|^p)^(1/p) over every element."""
    return float(np.sum(np.abs(pattern) ** p) ** (1.0 / p))


def tv_denoise(signal: np.ndarray, weight: float) -> np.ndarray:
    """Exact minimizer of 0.5 * ||x - signal||^2 + weight * sum_t |x[t+1] - x[t]|.

    Direct taut-string scan over one channel; a large enough weight
    returns the channel mean everywhere.
    """
    y = np.asarray(signal, dtype=np.float64)
    n = y.size
    if n == 0 or weight <= 0:
        return y.copy()
    lam = float(weight)
    # at or above this weight the minimizer is the constant mean
    if lam >= np.max(np.abs(np.cumsum(y - y.mean())[:-1]), initial=0.0):
        return np.full(n, y.mean())
    x = np.empty(n)
    k = k0 = kminus = kplus = 0
    umin, umax = lam, -lam
    vmin, vmax = y[0] - lam, y[0] + lam
    while True:
        while k == n - 1:
            if umin < 0.0:
                x[k0:kminus + 1] = vmin
                k = kminus = k0 = kminus + 1
                vmin = y[k]
                umin = lam
                umax = vmin + lam - vmax
            elif umax > 0.0:
                x[k0:kplus + 1] = vmax
                k = kplus = k0 = kplus + 1
                vmax = y[k]
                umax = -lam
                umin = vmax - lam - vmin
            else:
                vmin += umin / (k - k0 + 1)
                x[k0:k + 1] = vmin
                return x
        umin += y[k + 1] - vmin
        if umin < -lam:
            x[k0:kminus + 1] = vmin
            k = kminus = kplus = k0 = kminus + 1
            vmin = y[k]
            vmax = vmin + 2.0 * lam
            umin, umax = lam, -lam
            continue
        umax += y[k + 1] - vmax
        if umax > lam:
            x[k0:kplus + 1] = vmax
            k = kminus = kplus = k0 = kplus + 1
            vmax = y[k]
            vmin = vmax - 2.0 * lam
            umin, umax = lam, -lam
            continue
        k += 1
        if umin >= lam:
            kminus = k
            vmin += (umin - lam) / (kminus - k0 + 1)
            umin = lam
        if umax <= -lam:
            kplus = k
            vmax += (umax + lam) / (kplus - k0 + 1)
            umax = -lam


def _lp_gradient(x: np.ndarray, p: float) -> np.ndarray:
    norm = lp_norm(x, p)
    if norm == 0:
        return np.zeros_like(x)
    return np.sign(x) * np.abs(x) ** (p - 1) / norm ** (p - 1)


def dominant_frequency(channel: np.ndarray, fs: float = TARGET_RATE_HZ) -> float:
    """Frequency of the largest periodogram bin above 0.5 Hz."""
    freqs, power = periodogram(np.asarray(channel, dtype=np.float64), fs=fs)
    above = freqs > MIN_FREQ_HZ
    if not np.any(above):
        return float(freqs[-1])
    return float(freqs[above][np.argmax(power[above])])


def target_layer(model: Network, layer_index: int, filter_index: int) -> int:
    """Network index whose output holds the chosen unit.

    Raises:
        DecodingError: Unknown block or filter
    """
    if layer_index == OUTPUT_LAYER:
        idx = len(model.layers) - 1
        n_units = model.layers[idx].output_shape[0]
    else:
        try:
            idx = model.layer_index(f"bn{layer_index}")
        except KeyError:
            raise DecodingError(
                f"layer_index {layer_index} is not a conv block of this model (use 1-4, or {OUTPUT_LAYER} for the output)"
            )
        n_units = model.layers[idx].output_shape[0]
    if not 0 <= filter_index < n_units:
        raise DecodingError(f"filter_index {filter_index} out of range for layer {layer_index} ({n_units} units)")
    return idx


class FilterObjective:
    """Regularized activation of one unit and its input gradient."""

    def __init__(self, model: Network, cfg: AmConfig):
        self.model = model
        self.cfg = cfg
        self.layer = target_layer(model, cfg.layer_index, cfg.filter_index)
        self.ctx = ForwardContext(bn_mode="infer", dropout=False, update_stats=False)

    def activation(self, x: np.ndarray) -> float:
        out, _ = self.model.forward(x[None], self.ctx, upto=self.layer + 1, record=False)
        return float(np.mean(out[0, self.cfg.filter_index]))

    def value(self, x: np.ndarray) -> float:
        cfg = self.cfg
        n = x.size
        return (self.activation(x)
                - cfg.tv_weight * total_variation(x) / n
                - cfg.lp_weight * lp_norm(x, cfg.lp_p) / n)

    def value_and_gradient(self, x: np.ndarray) -> Tuple[float, float, np.ndarray]:
        """(objective, activation, gradient of the smooth terms).

        The gradient covers the activation and the Lp penalty; total
        variation is handled by its proximal operator in the ascent loop.
        """
        cfg = self.cfg
        n = x.size
        out, tape = self.model.forward(x[None], self.ctx, upto=self.layer + 1)
        unit = out[0, cfg.filter_index]
        activation = float(np.mean(unit))

        dout = np.zeros_like(out)
        dout[0, cfg.filter_index] = 1.0 / np.size(unit)
        _, dx = self.model.backward(tape, dout)

        objective = (activation
                     - cfg.tv_weight * total_variation(x) / n
                     - cfg.lp_weight * lp_norm(x, cfg.lp_p) / n)
        grad = dx[0] - cfg.lp_weight * _lp_gradient(x, cfg.lp_p) / n
        return objective, activation, grad


def activation_maximization(model: Network, cfg: AmConfig) -> AmResult:
    """Gradient ascent on the input for one filter.

    Args:
        model: Trained network (read-only)
        cfg: Target unit and optimizer settings

    Returns:
        AmResult holding the best pattern visited; loss_history is the
        running best objective after each step

    Raises:
        DecodingError: Invalid indices or a non-finite objective
    """
    objective = FilterObjective(model, cfg)
    low, high = cfg.input_range
    rng = np.random.default_rng([cfg.seed, cfg.layer_index, cfg.filter_index])
    x = np.clip(rng.uniform(-1.0, 1.0, size=model.input_shape), low, high)

    best_value, best_activation, grad = objective.value_and_gradient(x)
    initial_value = best_value
    best_x = x.copy()
    history = []

    n = x.size
    for step in range(1, cfg.steps + 1):
        norm = np.linalg.norm(grad)
        rate = cfg.step_size / norm if norm > 0 else cfg.step_size
        x = x + rate * grad
        if cfg.tv_weight > 0:
            x = np.stack([tv_denoise(ch, rate * cfg.tv_weight / n) for ch in x])
        x = np.clip(x, low, high)
        value, activation, grad = objective.value_and_gradient(x)
        if not np.isfinite(value):
            raise DecodingError(
                f"Non-finite objective at step {step} (layer {cfg.layer_index}, filter {cfg.filter_index})"
            )
        if value > best_value:
            best_value, best_activation, best_x = value, activation, x.copy()
        history.append(best_value)

    logger.debug("AM layer %d filter %d: objective %.4f -> %.4f",
                 cfg.layer_index, cfg.filter_index, initial_value, best_value)
    return AmResult(
        layer_index=cfg.layer_index,
        filter_index=cfg.filter_index,
        pattern=best_x,
        activation=best_activation,
        objective=best_value,
        initial_objective=initial_value,
        loss_history=history,
        dominant_hz=[dominant_frequency(ch) for ch in best_x],
    )


def filter_count(model: Network, layer_index: int) -> int:
    """Units available at ``layer_index``."""
    return model.layers[target_layer(model, layer_index, 0)].output_shape[0]


def decode_filters(
    model: Network,
    base: AmConfig,
    filters: Optional[List[int]] = None,
    on_filter=None,
) -> List[AmResult]:
    """Run activation maximization for several filters of one layer.

    Args:
        model: Trained network
        base: Settings shared by every filter (filter_index is overridden)
        filters: Filter indices; None means every filter of the layer
        on_filter: Called with each finished AmResult
    """
    if filters is None:
        filters = list(range(filter_count(model, base.layer_index)))
    results = []
    for index in filters:
        cfg = replace(base, filter_index=index)
        result = activation_maximization(model, cfg)
        results.append(result)
        if on_filter is not None:
            on_filter(result)
    return results
