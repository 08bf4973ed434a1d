"""Shared fixtures: small synthetic datasets and reduced networks."""

import numpy as np
import pytest

from src.eeg import SynthConfig, synth_dataset
from src.nn import LayerSpec, Network


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run end-to-end synthetic suites")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch):
    """Keep a developer's SEIZNET_* environment out of the tests."""
    monkeypatch.delenv("SEIZNET_CONFIG", raising=False)
    monkeypatch.delenv("SEIZNET_LOG_LEVEL", raising=False)


SMALL_SYNTH = dict(
    n_subjects=3,
    duration_s=60.0,
    n_channels=2,
    seizure_count_range=(1, 2),
    seizure_len_range_s=(8.0, 10.0),
    seed=3,
)


@pytest.fixture(scope="session")
def small_dataset():
    """Three 60 s, 2-channel subjects with one or two 8-10 s seizures each."""
    return synth_dataset(SynthConfig(**SMALL_SYNTH))


def tiny_specs(dropout: float = 0.0):
    """Two conv blocks and a 2-unit head, named like SeizNet's layers."""
    return [
        LayerSpec("conv_time", "conv1", {"out_channels": 3, "kernel_len": 5}),
        LayerSpec("batchnorm", "bn1", {"channels": 3, "momentum": 0.99, "epsilon": 1e-3}),
        LayerSpec("relu", "relu1"),
        LayerSpec("maxpool_time", "pool1", {"pool_len": 2}),
        LayerSpec("dropout", "drop1", {"rate": dropout}),
        LayerSpec("conv_time", "conv2", {"out_channels": 4, "kernel_len": 4}),
        LayerSpec("batchnorm", "bn2", {"channels": 4, "momentum": 0.99, "epsilon": 1e-3}),
        LayerSpec("relu", "relu2"),
        LayerSpec("maxpool_time", "pool2", {"pool_len": 2}),
        LayerSpec("dropout", "drop2", {"rate": dropout}),
        LayerSpec("flatten", "flatten"),
        LayerSpec("dense", "dense1", {"out_units": 6}),
        LayerSpec("relu", "relu5"),
        LayerSpec("dense", "dense2", {"out_units": 2}),
    ]


@pytest.fixture
def tiny_net():
    """Reduced SeizNet-shaped network over (2, 32) inputs."""
    return Network(tiny_specs(), (2, 32), seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
