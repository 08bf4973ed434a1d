"""Detector implementations."""

from typing import Any, Dict, Optional

from ..utils.errors import ConfigError, IngestionError
from .base_detector import BaseDetector
from .bpsvm import BPsvmDetector, SvmConfig, SvmModel, band_power_features, svm_predict, svm_train
from .seiznet import SeizNetDetector, TrainConfig, build_seiznet, param_count, predict, train

METHODS = ("seiznet", "bpsvm")


def create_detector(
    method: str,
    n_channels: int,
    config: Optional[Dict[str, Any]] = None,
    seed: int = 0,
) -> BaseDetector:
    """Build an untrained detector by method name.

    Args:
        method: "seiznet" or "bpsvm"
        n_channels: Channels per epoch
        config: Loaded configuration (sections "seiznet", "bpsvm", "evaluation")
        seed: Seed for weight initialization and training streams

    Returns:
        Detector instance
    """
    config = config or {}
    if method == "seiznet":
        section = dict(config.get("seiznet", {}))
        threshold = config.get("evaluation", {}).get("threshold", 0.5)
        train_config = TrainConfig(seed=seed, **section)
        return SeizNetDetector(n_channels, train_config=train_config, init_seed=seed, threshold=threshold)
    if method == "bpsvm":
        return BPsvmDetector(n_channels, config=SvmConfig(**config.get("bpsvm", {})))
    raise ConfigError(f"Unknown method '{method}'. Supported: {', '.join(METHODS)}")


def load_detector(path, threshold: float = 0.5) -> BaseDetector:
    """Load a saved model, telling the two file formats apart by their first token."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            head = f.readline().split(" ", 1)[0]
    except OSError as e:
        raise IngestionError(f"cannot read model: {e}", str(path))
    if head == "svm":
        return BPsvmDetector.load(path)
    return SeizNetDetector.load(path, threshold=threshold)


__all__ = [
    "BaseDetector",
    "BPsvmDetector",
    "METHODS",
    "SeizNetDetector",
    "SvmConfig",
    "SvmModel",
    "TrainConfig",
    "band_power_features",
    "build_seiznet",
    "create_detector",
    "load_detector",
    "param_count",
    "predict",
    "svm_predict",
    "svm_train",
]
