"""Configuration loading: built-in defaults, config.yaml, environment."""

import copy
import os
from pathlib import Path
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Union

import yaml

from .errors import ConfigError


DEFAULT_CONFIG: Dict[str, Any] = {
    "run": {
        "seed": 7,
        "data": "data",
        "method": "seiznet",
    },
    "synth": {
        "n_subjects": 6,
        "duration_s": 600.0,
        "n_channels": 2,
        "seizure_count_range": [3, 5],
        "seizure_len_range_s": [8.0, 15.0],
        "spike_wave_hz": 3.0,
        "background_alpha_hz": 10.0,
        "noise_sigma": 10.0,
    },
    "preprocessing": {
        "channels": "all",
        "two_channel_subset": ["C3", "C4"],
        "interictal_stride_s": 5.0,
        "ictal_stride_s": 0.075,
    },
    "seiznet": {
        "lr": 4.1e-3,
        "batch_size": 128,
        "epochs": 100,
        "validation_fraction": 0.0,
        "beta1": 0.9,
        "beta2": 0.999,
        "adam_epsilon": 1e-7,
    },
    "bpsvm": {
        "C": 1.0,
        "gamma": None,
        "tol": 1e-3,
        "max_iter": 200000,
    },
    "evaluation": {
        "repeats": 10,
        "threshold": 0.5,
    },
    "decoding": {
        "layer": 4,
        "filters": "all",
        "steps": 200,
        "step_size": 0.1,
        "tv_weight": 10.0,
        "lp_weight": 10.0,
        "lp_p": 6.0,
        "input_range": [-10.0, 10.0],
    },
    "output": {
        "dir": "runs",
        "plots": True,
    },
}

# Flat manifest keys (mirroring CLI long flags) and the section they live in.
FLAT_KEYS = {
    "seed": ("run", "seed"),
    "data": ("run", "data"),
    "method": ("run", "method"),
    "subjects": ("synth", "n_subjects"),
    "duration": ("synth", "duration_s"),
    "n_channels": ("synth", "n_channels"),
    "channels": ("preprocessing", "channels"),
    "lr": ("seiznet", "lr"),
    "batch_size": ("seiznet", "batch_size"),
    "epochs": ("seiznet", "epochs"),
    "validation_fraction": ("seiznet", "validation_fraction"),
    "C": ("bpsvm", "C"),
    "gamma": ("bpsvm", "gamma"),
    "repeats": ("evaluation", "repeats"),
    "threshold": ("evaluation", "threshold"),
    "layer": ("decoding", "layer"),
    "filters": ("decoding", "filters"),
    "steps": ("decoding", "steps"),
    "step_size": ("decoding", "step_size"),
    "tv_weight": ("decoding", "tv_weight"),
    "lp_weight": ("decoding", "lp_weight"),
    "out": ("output", "dir"),
    "plots": ("output", "plots"),
}


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {path} is not valid YAML: {e}")

    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping at top level")
    return data


def normalize_manifest(data: Dict[str, Any]) -> Dict[str, Any]:
    """Fold flat flag-style keys into their config sections.

    Args:
        data: Parsed YAML mapping, sectioned and/or flat

    Returns:
        Sectioned mapping
    """
    sectioned: Dict[str, Any] = {}
    for key, value in data.items():
        if key in DEFAULT_CONFIG and isinstance(value, dict):
            unknown = sorted(set(value) - set(DEFAULT_CONFIG[key]))
            if unknown:
                raise ConfigError(f"Unknown key(s) in section '{key}': {', '.join(unknown)}")
            sectioned = _deep_merge(sectioned, {key: value})
        elif key.replace("-", "_") in FLAT_KEYS:
            section, field = FLAT_KEYS[key.replace("-", "_")]
            sectioned.setdefault(section, {})[field] = value
        else:
            raise ConfigError(f"Unknown config key '{key}'")
    return sectioned


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """Load configuration.

    Resolution order: built-in defaults, then the repository config.yaml (or
    the file named by SEIZNET_CONFIG), then the explicit path if given.

    Args:
        path: Optional experiment manifest

    Returns:
        Fully populated configuration dictionary
    """
    config = copy.deepcopy(DEFAULT_CONFIG)

    base_path = os.getenv("SEIZNET_CONFIG")
    if base_path:
        config = _deep_merge(config, normalize_manifest(_read_yaml(Path(base_path))))
    else:
        repo_config = Path(__file__).resolve().parents[2] / "config.yaml"
        if repo_config.exists():
            config = _deep_merge(config, normalize_manifest(_read_yaml(repo_config)))

    if path:
        config = _deep_merge(config, normalize_manifest(_read_yaml(Path(path))))

    return config


def apply_overrides(config: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Set flat flag values (None means "not given") on top of a loaded config."""
    merged = copy.deepcopy(config)
    for key, value in overrides.items():
        if value is None or key not in FLAT_KEYS:
            continue
        section, field = FLAT_KEYS[key]
        merged.setdefault(section, {})[field] = value
    return merged


def parse_channels(value: Union[str, List[str], None]) -> Union[str, List[str]]:
    """Turn a "C3,C4" / "all" value into a channel list or "all"."""
    if value is None or value == "all":
        return "all"
    if isinstance(value, str):
        names = [v.strip() for v in value.split(",") if v.strip()]
    else:
        names = [str(v).strip() for v in value]
    if not names:
        raise ConfigError("Channel list is empty")
    return names


@dataclass
class RunConfig:
    """Resolved settings of one CLI run.

    Attributes:
        dataset_root: Directory with one sub-directory per subject
        channels: Channel names or "all"
        method: "seiznet" or "bpsvm"
        repeats: LOSO repeats whose mode is reported
        output_dir: Where reports and models go
        seed: Run seed
    """

    dataset_root: Path
    channels: Union[str, List[str]]
    method: str
    repeats: int
    output_dir: Path
    seed: int

    def __post_init__(self):
        if self.method not in ("seiznet", "bpsvm"):
            raise ConfigError(f"Unknown method '{self.method}'. Supported: seiznet, bpsvm")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if not self.channels:
            raise ConfigError("Channel list is empty")
        if self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "RunConfig":
        return cls(
            dataset_root=Path(config["run"]["data"]),
            channels=parse_channels(config["preprocessing"]["channels"]),
            method=config["run"]["method"],
            repeats=int(config["evaluation"]["repeats"]),
            output_dir=Path(config["output"]["dir"]),
            seed=int(config["run"]["seed"]),
        )
