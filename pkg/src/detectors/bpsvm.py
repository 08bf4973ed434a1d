"""BPsvm: per-second band powers fed to an RBF-kernel SVM trained by SMO."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.fft import rfft
from scipy.spatial.distance import cdist

from ..eeg.recording import TARGET_RATE_HZ
from ..pipeline.epoching import EPOCH_SAMPLES, Epoch, WindowingPolicy, stack_epochs
from ..utils.errors import ConfigError, IngestionError, ShapeError, TrainingError
from .base_detector import BaseDetector


logger = logging.getLogger(__name__)

BANDS = ((1, 3), (3, 6), (6, 9), (9, 12), (12, 15), (15, 18), (18, 21), (21, 24))
SUB_WINDOWS = 5
SUB_WINDOW_SAMPLES = int(TARGET_RATE_HZ)
SV_THRESHOLD = 1e-8


def band_power_matrix(x: np.ndarray) -> np.ndarray:
    """Band-power features of a batch (B, C, 1000) -> (B, 8 * 5 * C).

    Each 1-second sub-window gets a rectangular-window periodogram
    |X(f)|^2 / N with 1 Hz bins; band [lo, hi) sums bins lo..hi-1.
    Features are ordered sub-window major, then channel, then band.
    """
    if x.ndim != 3 or x.shape[2] != EPOCH_SAMPLES:
        raise ShapeError(f"Band power needs (B, C, {EPOCH_SAMPLES}) epochs, got {x.shape}")
    batch, channels, _ = x.shape
    windows = x.reshape(batch, channels, SUB_WINDOWS, SUB_WINDOW_SAMPLES)
    power = np.abs(rfft(windows, axis=-1)) ** 2 / SUB_WINDOW_SAMPLES
    bands = np.stack([power[..., lo:hi].sum(axis=-1) for lo, hi in BANDS], axis=-1)
    return bands.transpose(0, 2, 1, 3).reshape(batch, -1)


def band_power_features(epoch: Union[Epoch, np.ndarray]) -> np.ndarray:
    """Band-power feature vector of one epoch (length 40 per channel)."""
    data = epoch.data if isinstance(epoch, Epoch) else np.asarray(epoch, dtype=np.float64)
    if data.ndim != 2:
        raise ShapeError(f"Epoch data must be (channels x {EPOCH_SAMPLES}), got {data.shape}")
    return band_power_matrix(data[None])[0]


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a_i - b_j||^2) for all row pairs."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    return np.exp(-gamma * cdist(a, b, "sqeuclidean"))


@dataclass
class SvmModel:
    """Trained RBF SVM.

    Attributes:
        support_vectors: (m, d) support vectors in the standardized space
        dual_coef: alpha_i * y_i per support vector
        bias: Decision-function offset b
        gamma: RBF width
        C: Box constraint the model was trained with
        feature_mean: Per-dimension mean subtracted before the kernel
        feature_scale: Per-dimension divisor applied after centering
    """

    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    gamma: float
    C: float
    feature_mean: Optional[np.ndarray] = None
    feature_scale: Optional[np.ndarray] = None

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def alphas(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    def standardize(self, features: np.ndarray) -> np.ndarray:
        out = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if self.feature_mean is not None:
            out = (out - self.feature_mean) / self.feature_scale
        return out


@dataclass
class SvmConfig:
    C: float = 1.0
    gamma: Optional[float] = None
    tol: float = 1e-3
    max_iter: int = 200_000

    def __post_init__(self):
        if self.C <= 0:
            raise ConfigError(f"SVM C must be > 0, got {self.C}")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError(f"SVM gamma must be > 0, got {self.gamma}")
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigError("SVM tol must be > 0 and max_iter >= 1")


def _check_labels(labels: np.ndarray) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise TrainingError("SVM labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise TrainingError("SVM training needs both classes, got a single-class set")
    return y


def svm_train(
    features: np.ndarray,
    labels: np.ndarray,
    C: float = 1.0,
    gamma: float = 1.0,
    tol: float = 1e-3,
    max_iter: int = 200_000,
) -> SvmModel:
    """Solve the soft-margin dual by sequential minimal optimization.

    Working pairs are the maximal violating pair on the score ``y - u`` with
    ``u = sum_k alpha_k y_k K(x_k, .)``; the loop stops once the violation
    gap drops below ``tol``.

    Args:
        features: (n, d) training matrix
        labels: Labels in {-1, +1}
        C: Box constraint
        gamma: RBF width
        tol: KKT tolerance
        max_iter: Pair updates before giving up

    Returns:
        SvmModel holding only the support vectors (alpha > 1e-8)

    Raises:
        TrainingError: Single-class input or bad labels
    """
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = _check_labels(labels)
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"{x.shape[0]} feature rows but {y.shape[0]} labels")
    SvmConfig(C=C, gamma=gamma, tol=tol, max_iter=max_iter)

    n = x.shape[0]
    kernel = rbf_kernel(x, x, gamma)
    alpha = np.zeros(n)
    score = y.copy()
    positive = y > 0

    gap = np.inf
    i = j = 0
    iterations = 0
    while iterations < max_iter:
        below_c = alpha < C
        above_zero = alpha > 0
        up = (positive & below_c) | (~positive & above_zero)
        low = (~positive & below_c) | (positive & above_zero)

        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        gap = score[i] - score[j]
        if gap < tol:
            break

        eta = max(kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j], 1e-12)
        t = gap / eta
        t = min(t, C - alpha[i] if positive[i] else alpha[i])
        t = min(t, alpha[j] if positive[j] else C - alpha[j])

        alpha[i] = np.clip(alpha[i] + y[i] * t, 0.0, C)
        alpha[j] = np.clip(alpha[j] - y[j] * t, 0.0, C)
        score -= t * (kernel[i] - kernel[j])
        iterations += 1
    else:
        logger.warning("SMO stopped after %d pair updates with KKT gap %.3e", max_iter, gap)

    free = (alpha > SV_THRESHOLD) & (alpha < C - SV_THRESHOLD)
    bias = float(np.mean(score[free])) if np.any(free) else float((score[i] + score[j]) / 2.0)

    support = alpha > SV_THRESHOLD
    logger.debug("SMO: %d iterations, %d support vectors, b=%.4f", iterations, int(support.sum()), bias)
    return SvmModel(
        support_vectors=x[support].copy(),
        dual_coef=alpha[support] * y[support],
        bias=bias,
        gamma=float(gamma),
        C=float(C),
    )


def svm_decision(model: SvmModel, features: np.ndarray) -> np.ndarray:
    """Decision values for a batch of raw feature rows."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[1] != model.n_features:
        raise ShapeError(f"SVM trained on {model.n_features} features, got {x.shape[1]}")
    z = model.standardize(x)
    return rbf_kernel(z, model.support_vectors, model.gamma) @ model.dual_coef + model.bias


def svm_predict(model: SvmModel, feature: np.ndarray) -> Tuple[float, int]:
    """(score, label) for one feature vector; a zero score is labeled -1."""
    score = float(svm_decision(model, np.asarray(feature, dtype=np.float64).reshape(1, -1))[0])
    return score, 1 if score > 0 else -1


def _values(row: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in row)


def save_svm(model: SvmModel, path: Union[str, Path]) -> None:
    """Write the model: a header line, optional mean/scale lines, then ``sv coef x1 .. xd`` lines."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"svm gamma={model.gamma!r} C={model.C!r} bias={model.bias!r} "
        f"n_features={model.n_features} n_sv={len(model.dual_coef)}"
    ]
    if model.feature_mean is not None:
        lines.append("mean " + _values(model.feature_mean))
        lines.append("scale " + _values(model.feature_scale))
    for coef, sv in zip(model.dual_coef, model.support_vectors):
        lines.append(f"sv {float(coef)!r} " + _values(sv))
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_svm(path: Union[str, Path]) -> SvmModel:
    """Read a file written by save_svm.

    Raises:
        IngestionError: Malformed header or vector lines
    """
    path_str = str(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise IngestionError(f"cannot read SVM model: {e}", path_str)
    if not lines or not lines[0].startswith("svm "):
        raise IngestionError("SVM model file must start with an 'svm' header", path_str, 1)

    try:
        header = dict(token.split("=", 1) for token in lines[0].split()[1:])
        gamma, C, bias = float(header["gamma"]), float(header["C"]), float(header["bias"])
        n_features, n_sv = int(header["n_features"]), int(header["n_sv"])
    except (KeyError, ValueError) as e:
        raise IngestionError(f"bad SVM header: {e}", path_str, 1)

    mean = scale = None
    coefs: List[float] = []
    vectors: List[np.ndarray] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tag, *rest = line.split()
        try:
            values = np.array([float(v) for v in rest])
        except ValueError as e:
            raise IngestionError(f"non-numeric value: {e}", path_str, line_no)
        expected = n_features + 1 if tag == "sv" else n_features
        if tag not in ("mean", "scale", "sv") or len(values) != expected:
            raise IngestionError(f"expected '{tag}' line with {expected} values, got {len(values)}", path_str, line_no)
        if tag == "mean":
            mean = values
        elif tag == "scale":
            scale = values
        else:
            coefs.append(values[0])
            vectors.append(values[1:])

    if len(coefs) != n_sv:
        raise IngestionError(f"header announces {n_sv} support vectors, file has {len(coefs)}", path_str)
    if (mean is None) != (scale is None):
        raise IngestionError("mean and scale lines must appear together", path_str)
    return SvmModel(
        support_vectors=np.array(vectors).reshape(n_sv, n_features),
        dual_coef=np.array(coefs),
        bias=bias,
        gamma=gamma,
        C=C,
        feature_mean=mean,
        feature_scale=scale,
    )


def default_gamma(standardized: np.ndarray) -> float:
    """1 / (d * Var(features)), the scale-aware RBF width."""
    d = standardized.shape[1]
    var = float(np.var(standardized))
    return 1.0 / (d * var) if var > 0 else 1.0 / d


class BPsvmDetector(BaseDetector):
    """Band-power SVM behind the detector interface."""

    name = "bpsvm"

    def __init__(self, n_channels: int, config: Optional[SvmConfig] = None,
                 model: Optional[SvmModel] = None):
        super().__init__(n_channels)
        self.config = config or SvmConfig()
        self.model = model

    @property
    def is_deterministic(self) -> bool:
        return True

    def training_policy(self, base: WindowingPolicy) -> WindowingPolicy:
        return WindowingPolicy.unaugmented()

    def fit(self, epochs: Sequence[Epoch], on_epoch=None) -> "BPsvmDetector":
        self.check_channels(epochs)
        x, y = stack_epochs(epochs)
        features = band_power_matrix(x)
        labels = np.where(y == 1, 1.0, -1.0)

        mean = features.mean(axis=0)
        scale = features.std(axis=0)
        scale[scale == 0] = 1.0
        standardized = (features - mean) / scale
        gamma = self.config.gamma if self.config.gamma is not None else default_gamma(standardized)

        model = svm_train(standardized, labels, C=self.config.C, gamma=gamma,
                          tol=self.config.tol, max_iter=self.config.max_iter)
        model.feature_mean = mean
        model.feature_scale = scale
        self.model = model
        logger.info("BPsvm trained on %d epochs: %d support vectors, gamma %.3g",
                    len(epochs), len(model.dual_coef), gamma)
        return self

    def decision(self, epochs: Sequence[Epoch]) -> np.ndarray:
        if self.model is None:
            raise TrainingError("BPsvm detector used before fit")
        self.check_channels(epochs)
        if not epochs:
            return np.zeros(0)
        x, _ = stack_epochs(epochs)
        return svm_decision(self.model, band_power_matrix(x))

    def is_ictal(self, scores: np.ndarray) -> np.ndarray:
        return np.asarray(scores) > 0

    def save(self, path: Union[str, Path]) -> None:
        if self.model is None:
            raise TrainingError("BPsvm detector has no model to save")
        save_svm(self.model, path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BPsvmDetector":
        model = load_svm(path)
        n_channels = model.n_features // (len(BANDS) * SUB_WINDOWS)
        return cls(n_channels, model=model)
