"""Central finite-difference check of analytic network gradients."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .functional import softmax_ce
from .layers import ForwardContext, MaxPoolTime, ReLU
from .network import Network, Tape


logger = logging.getLogger(__name__)

INPUT_KEY = "input"


@dataclass
class GradCheckReport:
    """Outcome of grad_check.

    Attributes:
        max_rel_error: Largest relative error over checked coordinates
        tolerance: Threshold the check was run with
        n_checked: Coordinates compared
        n_kinks_skipped: Coordinates excluded because a perturbation flipped
            a ReLU mask or a max-pool winner
        per_tensor: Largest relative error per tensor
    """

    max_rel_error: float
    tolerance: float
    n_checked: int
    n_kinks_skipped: int
    per_tensor: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """True when at least one coordinate was compared and all were within tolerance."""
        return self.n_checked > 0 and self.max_rel_error < self.tolerance


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)


def _frozen_context() -> ForwardContext:
    # batch statistics without running-stat updates; dropout off
    return ForwardContext(bn_mode="train", dropout=False, update_stats=False)


def _activation_pattern(model: Network, tape: Tape) -> List[np.ndarray]:
    pattern = []
    for idx, cache in tape.entries:
        layer = model.layers[idx]
        if isinstance(layer, ReLU):
            pattern.append(cache)
        elif isinstance(layer, MaxPoolTime):
            pattern.append(cache[0])
    return pattern


def _loss_and_pattern(model: Network, x: np.ndarray, labels: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    logits, tape = model.forward(x, _frozen_context())
    loss, _ = softmax_ce(logits, labels)
    return loss, _activation_pattern(model, tape)


def grad_check(
    model: Network,
    batch: Tuple[np.ndarray, np.ndarray],
    tolerance: float = 1e-4,
    perturbation: float = 1e-3,
    samples_per_tensor: int = 6,
    seed: int = 0,
    include_input: bool = True,
    gradient_hook: Optional[Callable[[Dict[str, np.ndarray]], None]] = None,
) -> GradCheckReport:
    """Compare backward() against central finite differences.

    A fixed-seed subsample of coordinates is drawn from every parameter tensor
    (and the input batch). Coordinates whose perturbation crosses a ReLU or
    max-pool kink are skipped and counted.

    Args:
        model: Network to check; its weights are restored afterwards
        batch: (x, one-hot labels)
        tolerance: Pass threshold on the maximum relative error
        perturbation: Finite-difference step
        samples_per_tensor: Coordinates drawn per tensor
        seed: Seed of the coordinate subsample
        include_input: Also check the input gradient
        gradient_hook: Called with the analytic gradients before comparison

    Returns:
        GradCheckReport
    """
    x, labels = batch
    x = np.array(x, dtype=np.float64)
    rng = np.random.default_rng(seed)

    logits, tape = model.forward(x, _frozen_context())
    _, dlogits = softmax_ce(logits, labels)
    base_pattern = _activation_pattern(model, tape)
    grads, dx = model.backward(tape, dlogits)
    grads = {k: v.copy() for k, v in grads.items()}
    grads[INPUT_KEY] = dx.copy()
    if gradient_hook is not None:
        gradient_hook(grads)

    tensors = dict(model.parameters())
    if include_input:
        tensors[INPUT_KEY] = x

    def same_pattern(pattern):
        return all(np.array_equal(a, b) for a, b in zip(pattern, base_pattern))

    per_tensor: Dict[str, float] = {}
    n_checked = 0
    n_skipped = 0
    for name, tensor in tensors.items():
        flat = tensor.reshape(-1)
        picks = rng.choice(flat.size, size=min(samples_per_tensor, flat.size), replace=False)
        worst = 0.0
        for pos in np.sort(picks):
            original = flat[pos]
            flat[pos] = original + perturbation
            loss_plus, pattern_plus = _loss_and_pattern(model, x, labels)
            flat[pos] = original - perturbation
            loss_minus, pattern_minus = _loss_and_pattern(model, x, labels)
            flat[pos] = original

            if not (same_pattern(pattern_plus) and same_pattern(pattern_minus)):
                n_skipped += 1
                continue

            numeric = (loss_plus - loss_minus) / (2.0 * perturbation)
            analytic = float(grads[name].reshape(-1)[pos])
            worst = max(worst, relative_error(analytic, numeric))
            n_checked += 1
        per_tensor[name] = worst

    max_error = max(per_tensor.values()) if per_tensor else 0.0
    logger.info("Gradient check: max relative error %.3e over %d coordinates (%d kinks skipped)",
                max_error, n_checked, n_skipped)
    if n_checked == 0:
        logger.warning("Gradient check compared no coordinates; reporting a failure")
    return GradCheckReport(
        max_rel_error=max_error,
        tolerance=tolerance,
        n_checked=n_checked,
        n_kinks_skipped=n_skipped,
        per_tensor=per_tensor,
    )
