"""Forward and backward kernels for the layer types SeizNet uses.

Arrays are float64 numpy arrays (``Tensor``). Time-series activations are
laid out (batch, channels, time). Convolution is valid cross-correlation
along time, implemented as a strided window view times a weight matrix so
that summation order is fixed and results are bit-stable.
"""

from typing import Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..utils.errors import ShapeError


Tensor = np.ndarray


def _as_batch(x: Tensor) -> Tuple[Tensor, bool]:
    if x.ndim == 2:
        return x[None], True
    if x.ndim != 3:
        raise ShapeError(f"Expected (channels, time) or (batch, channels, time), got {x.shape}")
    return x, False


def _time_windows(x: Tensor, k: int) -> Tensor:
    """(B, C, L) -> (B, L-k+1, C*k) windows, channel-major within a window."""
    batch, channels, _ = x.shape
    win = sliding_window_view(x, k, axis=2)
    return win.transpose(0, 2, 1, 3).reshape(batch, -1, channels * k)


# ---------------------------------------------------------------------------
# convolution along time
# ---------------------------------------------------------------------------

def conv_time_forward(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Valid cross-correlation along time summed over input channels, plus bias.

    Args:
        x: Input (C, L) or (B, C, L)
        weights: Filters (K, C, k)
        bias: Bias (K,)

    Returns:
        Output (K, L-k+1) or (B, K, L-k+1)

    Raises:
        ShapeError: L < k or channel mismatch
    """
    xb, squeeze = _as_batch(x)
    n_filters, channels, k = weights.shape
    if xb.shape[1] != channels:
        raise ShapeError(f"Convolution expects {channels} input channels, got {xb.shape[1]}")
    if xb.shape[2] < k:
        raise ShapeError(f"Input length {xb.shape[2]} shorter than kernel {k}")

    cols = _time_windows(xb, k)
    out = cols @ weights.reshape(n_filters, channels * k).T
    out = out.transpose(0, 2, 1) + bias[None, :, None]
    return out[0] if squeeze else out


def conv_time_backward(dout: Tensor, x: Tensor, weights: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    """Gradients of conv_time_forward.

    Returns:
        (dx, dweights, dbias)
    """
    n_filters, channels, k = weights.shape
    batch, _, out_len = dout.shape

    cols = _time_windows(x, k).reshape(batch * out_len, channels * k)
    dflat = dout.transpose(0, 2, 1).reshape(batch * out_len, n_filters)
    dweights = (dflat.T @ cols).reshape(n_filters, channels, k)
    dbias = dout.sum(axis=(0, 2))

    # full correlation with the flipped kernel routes gradient back to inputs
    padded = np.pad(dout, ((0, 0), (0, 0), (k - 1, k - 1)))
    dcols = _time_windows(padded, k)
    flipped = weights[:, :, ::-1].transpose(0, 2, 1).reshape(n_filters * k, channels)
    dx = (dcols @ flipped).transpose(0, 2, 1)
    return dx, dweights, dbias


# ---------------------------------------------------------------------------
# max pooling along time
# ---------------------------------------------------------------------------

def maxpool_time_forward(x: Tensor, pool_len: int = 2) -> Tuple[Tensor, Tensor]:
    """Non-overlapping max over ``pool_len`` samples; the odd tail is dropped.

    Returns:
        (output, argmax) where argmax holds the winning offset in each pool

    Raises:
        ShapeError: L < pool_len
    """
    xb, squeeze = _as_batch(x)
    batch, channels, length = xb.shape
    if length < pool_len:
        raise ShapeError(f"Input length {length} shorter than pool {pool_len}")

    pooled = length // pool_len
    grouped = xb[:, :, :pooled * pool_len].reshape(batch, channels, pooled, pool_len)
    argmax = grouped.argmax(axis=3)
    out = np.take_along_axis(grouped, argmax[..., None], axis=3)[..., 0]
    if squeeze:
        return out[0], argmax[0]
    return out, argmax


def maxpool_time_backward(dout: Tensor, argmax: Tensor, input_len: int, pool_len: int = 2) -> Tensor:
    """Route pooled gradients to the winning input positions."""
    batch, channels, pooled = dout.shape
    grouped = np.zeros((batch, channels, pooled, pool_len))
    np.put_along_axis(grouped, argmax[..., None], dout[..., None], axis=3)
    dx = np.zeros((batch, channels, input_len))
    dx[:, :, :pooled * pool_len] = grouped.reshape(batch, channels, pooled * pool_len)
    return dx


# ---------------------------------------------------------------------------
# batch normalization over (batch, time) per channel
# ---------------------------------------------------------------------------

def batchnorm_forward(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    mode: str = "train",
    momentum: float = 0.99,
    epsilon: float = 1e-3,
    update_stats: bool = True,
) -> Tuple[Tensor, Dict[str, Tensor]]:
    """Per-channel batch normalization of (B, K, L) activations.

    Train mode normalizes with the batch mean and population variance over
    the batch and time axes and, if ``update_stats``, moves the running
    statistics in place by exponential averaging. Infer mode uses the running
    statistics.

    Returns:
        (output, cache) where cache["xhat"] is the pre-affine output
    """
    if mode == "train":
        if x.shape[0] * x.shape[2] < 2:
            raise ShapeError("Train-mode batch normalization needs at least 2 values per channel")
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        if update_stats:
            running_mean *= momentum
            running_mean += (1.0 - momentum) * mean
            running_var *= momentum
            running_var += (1.0 - momentum) * var
    elif mode == "infer":
        mean, var = running_mean, running_var
    else:
        raise ValueError(f"Unknown batch normalization mode '{mode}'")

    inv_std = 1.0 / np.sqrt(var + epsilon)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    out = gamma[None, :, None] * xhat + beta[None, :, None]
    return out, {"xhat": xhat, "inv_std": inv_std, "mode": mode}


def batchnorm_backward(dout: Tensor, gamma: Tensor, cache: Dict[str, Tensor]) -> Tuple[Tensor, Tensor, Tensor]:
    """Gradients of batchnorm_forward.

    Returns:
        (dx, dgamma, dbeta)
    """
    xhat, inv_std = cache["xhat"], cache["inv_std"]
    dgamma = np.sum(dout * xhat, axis=(0, 2))
    dbeta = dout.sum(axis=(0, 2))
    dxhat = dout * gamma[None, :, None]

    if cache["mode"] == "infer":
        return dxhat * inv_std[None, :, None], dgamma, dbeta

    n = dout.shape[0] * dout.shape[2]
    sum_dxhat = dxhat.sum(axis=(0, 2))[None, :, None]
    sum_dxhat_xhat = np.sum(dxhat * xhat, axis=(0, 2))[None, :, None]
    dx = (inv_std[None, :, None] / n) * (n * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)
    return dx, dgamma, dbeta


# ---------------------------------------------------------------------------
# dropout, relu, dense
# ---------------------------------------------------------------------------

def dropout_forward(
    x: Tensor, rate: float, mode: str = "train", rng: Optional[np.random.Generator] = None
) -> Tuple[Tensor, Optional[Tensor]]:
    """Inverted dropout.

    Train mode zeroes each unit with probability ``rate`` and scales survivors
    by 1/(1-rate); infer mode (or rate 0) is the identity.

    Returns:
        (output, mask) with mask None when nothing was dropped
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"Dropout rate must be in [0, 1), got {rate}")
    if mode != "train" or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("Train-mode dropout needs a random generator")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def relu_forward(x: Tensor) -> Tuple[Tensor, Tensor]:
    active = x > 0
    return x * active, active


def dense_forward(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Affine map; x is (d,) or (B, d), weights (u, d), bias (u,).

    Raises:
        ShapeError: Input width differs from the weight matrix
    """
    if x.shape[-1] != weights.shape[1] or bias.shape[0] != weights.shape[0]:
        raise ShapeError(
            f"Dense layer {weights.shape} with bias {bias.shape} cannot take input {x.shape}"
        )
    return x @ weights.T + bias


def dense_backward(dout: Tensor, x: Tensor, weights: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    """Returns (dx, dweights, dbias) for batched input."""
    return dout @ weights, dout.T @ x, dout.sum(axis=0)


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

def softmax(logits: Tensor) -> Tensor:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def softmax_ce(logits: Tensor, labels: Tensor) -> Tuple[float, Tensor]:
    """Mean softmax cross-entropy over the batch.

    Args:
        logits: (B, n_classes)
        labels: One-hot (B, n_classes)

    Returns:
        (loss, dloss/dlogits)
    """
    if logits.shape != labels.shape:
        raise ShapeError(f"Logits {logits.shape} and labels {labels.shape} differ")
    batch = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    loss = float(-np.sum(labels * log_probs) / batch)
    grad = (np.exp(log_probs) - labels) / batch
    return loss, grad


def one_hot(labels: Tensor, n_classes: int = 2) -> Tensor:
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out
