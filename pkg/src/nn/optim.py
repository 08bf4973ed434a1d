"""Adam optimizer over a dictionary of parameter tensors."""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np


@dataclass
class AdamState:
    """Adam hyper-parameters and moment estimates.

    Attributes:
        lr: Learning rate
        beta1: Decay of the first moment estimate
        beta2: Decay of the second moment estimate
        epsilon: Denominator floor
        step: Number of updates applied so far
        m: First moment estimate per parameter
        v: Second moment estimate per parameter (non-negative)
    """

    lr: float = 4.1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState) -> AdamState:
    """Apply one bias-corrected Adam update to ``params`` in place.

    Args:
        params: Parameter tensors, updated in place
        grads: Gradients with the same keys and shapes
        state: Optimizer state, updated in place

    Returns:
        The same state object, with ``step`` incremented
    """
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    step_size = state.lr / bc1

    for name, value in params.items():
        g = grads[name]
        if g.shape != value.shape:
            raise ValueError(f"Gradient for {name} has shape {g.shape}, parameter {value.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)

        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)

        denom = np.sqrt(v / bc2) + state.epsilon
        value -= step_size * m / denom
    return state
