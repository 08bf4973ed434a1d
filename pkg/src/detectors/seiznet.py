"""SeizNet: four conv blocks, a 50-unit dense layer and a 2-way softmax head.

Each conv block is conv -> batchnorm -> ReLU -> maxpool(2) -> dropout(0.2).
Kernel lengths are (10, 10, 20, 20): with those the activation lengths run
991 -> 495 -> 486 -> 243 -> 224 -> 112 -> 93 -> 46, the flattened width is
2944, and the parameter totals are 200,592 (2 channels) and 201,872
(18 channels) with 240 non-trainable batch-norm statistics.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..nn.functional import one_hot, softmax, softmax_ce
from ..nn.layers import ForwardContext, LayerSpec, specs_summary
from ..nn.network import Network
from ..nn.optim import AdamState, adam_step
from ..nn.weights_io import load_weights, save_weights
from ..pipeline.epoching import EPOCH_SAMPLES, Epoch, Label, WindowingPolicy, stack_epochs
from ..utils.errors import ChannelError, ConfigError, TrainingError
from .base_detector import BaseDetector


logger = logging.getLogger(__name__)

CONV_BLOCKS = ((8, 10), (16, 10), (32, 20), (64, 20))
BLOCK_DROPOUT = 0.2
DENSE_UNITS = 50
DENSE_DROPOUT = 0.5
N_CLASSES = 2
BN_MOMENTUM = 0.99
BN_EPSILON = 1e-3
INFER_BATCH = 256


def seiznet_specs() -> List[LayerSpec]:
    specs = []
    for block, (filters, kernel) in enumerate(CONV_BLOCKS, start=1):
        specs += [
            LayerSpec("conv_time", f"conv{block}", {"out_channels": filters, "kernel_len": kernel}),
            LayerSpec("batchnorm", f"bn{block}", {"channels": filters, "momentum": BN_MOMENTUM, "epsilon": BN_EPSILON}),
            LayerSpec("relu", f"relu{block}"),
            LayerSpec("maxpool_time", f"pool{block}", {"pool_len": 2}),
            LayerSpec("dropout", f"drop{block}", {"rate": BLOCK_DROPOUT}),
        ]
    specs += [
        LayerSpec("flatten", "flatten"),
        LayerSpec("dense", "dense1", {"out_units": DENSE_UNITS}),
        LayerSpec("relu", "relu5"),
        LayerSpec("dropout", "drop5", {"rate": DENSE_DROPOUT}),
        LayerSpec("dense", "dense2", {"out_units": N_CLASSES}),
    ]
    return specs


class SeizNetModel(Network):
    """Network built from ``seiznet_specs``."""

    def layer_table(self) -> List[Tuple[str, str, Tuple[int, ...], int]]:
        """(layer, kind, output shape, parameters) rows, one per layer."""
        return specs_summary(self.layers)


def build_seiznet(n_channels: int, seed: int = 0, input_len: int = EPOCH_SAMPLES) -> SeizNetModel:
    """Instantiate SeizNet for ``n_channels`` input channels.

    Args:
        n_channels: EEG channels per epoch (>= 1)
        seed: Weight initialization seed
        input_len: Samples per epoch

    Returns:
        Freshly initialized SeizNetModel
    """
    if n_channels < 1:
        raise ConfigError(f"SeizNet needs at least one channel, got {n_channels}")
    return SeizNetModel(seiznet_specs(), (n_channels, input_len), seed=seed)


def as_seiznet(model: Network) -> SeizNetModel:
    """Re-type a network loaded from a weights file."""
    model.__class__ = SeizNetModel
    return model


def param_count(model: Network) -> Tuple[int, int]:
    """(trainable, non-trainable) parameter totals."""
    return model.param_count()


@dataclass
class TrainConfig:
    """SeizNet training recipe.

    Attributes:
        lr: Adam learning rate
        batch_size: Mini-batch size
        epochs: Full passes over the training set
        seed: Shuffling, dropout and validation-split seed
        validation_fraction: Share of epochs held out for monitoring only
        beta1: Adam first-moment decay
        beta2: Adam second-moment decay
        adam_epsilon: Adam denominator floor
    """

    lr: float = 4.1e-3
    batch_size: int = 128
    epochs: int = 100
    seed: int = 0
    validation_fraction: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-7

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError(f"validation_fraction must be in [0, 1), got {self.validation_fraction}")
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")


@dataclass
class TrainHistory:
    """Per-pass training curves; validation lists stay empty without a split."""

    loss: List[float] = field(default_factory=list)
    accuracy: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    val_accuracy: List[float] = field(default_factory=list)

    def rows(self) -> List[Tuple[int, float, float, Optional[float], Optional[float]]]:
        out = []
        for idx, (loss, acc) in enumerate(zip(self.loss, self.accuracy)):
            val_loss = self.val_loss[idx] if idx < len(self.val_loss) else None
            val_acc = self.val_accuracy[idx] if idx < len(self.val_accuracy) else None
            out.append((idx + 1, loss, acc, val_loss, val_acc))
        return out


def _check_training_set(model: Network, x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[1] != model.n_channels:
        raise ChannelError(f"Model has {model.n_channels} channels, training epochs have {x.shape[1]}")
    if len(np.unique(y)) < 2:
        present = Label(int(y[0])).name.lower()
        raise TrainingError(f"Training set has only {present} epochs; both classes are required")


def evaluate_batches(model: Network, x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Inference-mode mean loss and accuracy."""
    probs = predict_proba(model, x)
    loss = -np.mean(np.log(np.clip(probs[np.arange(len(y)), y], 1e-300, None)))
    accuracy = float(np.mean(probs.argmax(axis=1) == y))
    return float(loss), accuracy


def train(
    model: Network,
    epochs: Sequence[Epoch],
    cfg: TrainConfig,
    on_epoch: Optional[Callable[[int, float, float], None]] = None,
) -> Tuple[Network, TrainHistory]:
    """Mini-batch Adam training with dropout and batch-norm in train mode.

    Args:
        model: Network to train in place
        epochs: Labeled training epochs
        cfg: Training recipe
        on_epoch: Called after each pass with (pass index, loss, accuracy)

    Returns:
        (model, history)

    Raises:
        TrainingError: Single-class training set
        ChannelError: Epoch channel count differs from the model
    """
    x, y = stack_epochs(epochs)
    _check_training_set(model, x, y)

    shuffle_seq, dropout_seq, split_seq = np.random.SeedSequence(cfg.seed).spawn(3)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    split_rng = np.random.default_rng(split_seq)
    ctx = ForwardContext(bn_mode="train", dropout=True, update_stats=True,
                         rng=np.random.default_rng(dropout_seq))

    x_val = y_val = None
    if cfg.validation_fraction > 0:
        order = split_rng.permutation(len(y))
        n_val = max(1, int(round(cfg.validation_fraction * len(y))))
        val_idx, train_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
        x_val, y_val = x[val_idx], y[val_idx]
        x, y = x[train_idx], y[train_idx]
        _check_training_set(model, x, y)

    targets = one_hot(y, N_CLASSES)
    state = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, epsilon=cfg.adam_epsilon)
    params = model.parameters()
    history = TrainHistory()
    n = len(y)

    for pass_idx in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            logits, tape = model.forward(x[idx], ctx)
            loss, dlogits = softmax_ce(logits, targets[idx])
            grads, _ = model.backward(tape, dlogits)
            adam_step(params, grads, state)

            total_loss += loss * len(idx)
            correct += int(np.sum(logits.argmax(axis=1) == y[idx]))

        history.loss.append(total_loss / n)
        history.accuracy.append(correct / n)
        if x_val is not None:
            val_loss, val_acc = evaluate_batches(model, x_val, y_val)
            history.val_loss.append(val_loss)
            history.val_accuracy.append(val_acc)

        logger.debug("pass %d/%d loss %.4f acc %.3f", pass_idx + 1, cfg.epochs,
                     history.loss[-1], history.accuracy[-1])
        if on_epoch is not None:
            on_epoch(pass_idx, history.loss[-1], history.accuracy[-1])

    return model, history


def predict_proba(model: Network, x: np.ndarray) -> np.ndarray:
    """Softmax class probabilities (B, 2) in inference mode."""
    if x.shape[1] != model.n_channels:
        raise ChannelError(f"Model has {model.n_channels} channels, input has {x.shape[1]}")
    out = []
    for start in range(0, x.shape[0], INFER_BATCH):
        logits, _ = model.forward(x[start:start + INFER_BATCH], record=False)
        out.append(softmax(logits))
    return np.concatenate(out, axis=0)


def predict(model: Network, epoch: Epoch) -> float:
    """Probability that ``epoch`` is ictal (dropout off, running batch-norm statistics).

    Raises:
        ChannelError: Epoch channel count differs from the model
    """
    return float(predict_proba(model, epoch.data[None])[0, Label.ICTAL])


class SeizNetDetector(BaseDetector):
    """SeizNet behind the detector interface."""

    name = "seiznet"

    def __init__(
        self,
        n_channels: int,
        train_config: Optional[TrainConfig] = None,
        init_seed: int = 0,
        threshold: float = 0.5,
        model: Optional[Network] = None,
    ):
        """Initialize SeizNet detector.

        Args:
            n_channels: Channels per epoch
            train_config: Training recipe (defaults to TrainConfig())
            init_seed: Weight initialization seed
            threshold: Ictal probability above which an epoch is flagged
            model: Pre-trained network to wrap instead of a fresh one
        """
        super().__init__(n_channels)
        self.train_config = train_config or TrainConfig()
        self.threshold = threshold
        self.model = model if model is not None else build_seiznet(n_channels, seed=init_seed)
        self.history: Optional[TrainHistory] = None

    @property
    def is_deterministic(self) -> bool:
        return False

    def training_policy(self, base: WindowingPolicy) -> WindowingPolicy:
        return WindowingPolicy(mode="train", interictal_stride_s=base.interictal_stride_s,
                               ictal_stride_s=base.ictal_stride_s)

    def fit(self, epochs, on_epoch=None):
        self.check_channels(epochs)
        self.model, self.history = train(self.model, epochs, self.train_config, on_epoch=on_epoch)
        return self

    def decision(self, epochs):
        self.check_channels(epochs)
        if not epochs:
            return np.zeros(0)
        x, _ = stack_epochs(epochs)
        return predict_proba(self.model, x)[:, Label.ICTAL]

    def is_ictal(self, scores):
        return np.asarray(scores) > self.threshold

    def save(self, path):
        save_weights(self.model, path)

    @classmethod
    def load(cls, path: Union[str, Path], threshold: float = 0.5) -> "SeizNetDetector":
        model = as_seiznet(load_weights(path))
        return cls(model.n_channels, model=model, threshold=threshold)
