"""Layer specifications and stateful layer objects."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..utils.errors import ConfigError
from . import functional as F


LAYER_KINDS = ("conv_time", "maxpool_time", "batchnorm", "dropout", "relu", "flatten", "dense")

# Parameters each kind carries in its descriptor.
SPEC_FIELDS = {
    "conv_time": ("out_channels", "kernel_len"),
    "maxpool_time": ("pool_len",),
    "batchnorm": ("channels", "momentum", "epsilon"),
    "dropout": ("rate",),
    "relu": (),
    "flatten": (),
    "dense": ("out_units",),
}


@dataclass
class LayerSpec:
    """Kind and hyper-parameters of one layer."""

    kind: str
    name: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ConfigError(f"Unknown layer kind '{self.kind}'")
        missing = [f for f in SPEC_FIELDS[self.kind] if f not in self.params]
        if missing:
            raise ConfigError(f"Layer {self.name} ({self.kind}) missing {', '.join(missing)}")
        p = self.params
        if self.kind == "conv_time" and (p["kernel_len"] < 1 or p["out_channels"] < 1):
            raise ConfigError(f"Layer {self.name}: kernel_len and out_channels must be >= 1")
        if self.kind == "dropout" and not 0.0 <= p["rate"] < 1.0:
            raise ConfigError(f"Layer {self.name}: dropout rate must be in [0, 1)")
        if self.kind == "batchnorm" and not 0.0 < p["momentum"] < 1.0:
            raise ConfigError(f"Layer {self.name}: momentum must be in (0, 1)")
        if self.kind == "maxpool_time" and p["pool_len"] < 1:
            raise ConfigError(f"Layer {self.name}: pool_len must be >= 1")

    def to_token(self) -> str:
        """Compact descriptor, e.g. ``conv_time/name=conv1/out_channels=8/kernel_len=10``."""
        parts = [self.kind, f"name={self.name}"]
        parts += [f"{key}={self.params[key]!r}" for key in SPEC_FIELDS[self.kind]]
        return "/".join(parts)

    @classmethod
    def from_token(cls, token: str) -> "LayerSpec":
        kind, *pairs = token.split("/")
        values = dict(pair.split("=", 1) for pair in pairs)
        name = values.pop("name")
        params = {}
        for key, raw in values.items():
            params[key] = int(raw) if raw.lstrip("-").isdigit() else float(raw)
        return cls(kind=kind, name=name, params=params)


@dataclass
class ForwardContext:
    """How a forward pass treats the stochastic and stateful layers."""

    bn_mode: str = "train"
    dropout: bool = True
    update_stats: bool = True
    rng: Optional[np.random.Generator] = None


def glorot_uniform(shape: Tuple[int, ...], fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """One layer of the sequential network.

    Trainable tensors live in ``params``; running statistics in ``state``.
    ``forward`` returns the output and a cache that ``backward`` consumes.
    """

    def __init__(self, spec: LayerSpec, input_shape: Tuple[int, ...], rng: np.random.Generator):
        self.spec = spec
        self.name = spec.name
        self.input_shape = input_shape
        self.params: Dict[str, np.ndarray] = {}
        self.state: Dict[str, np.ndarray] = {}
        self.output_shape = self._init(input_shape, rng)

    def _init(self, input_shape, rng) -> Tuple[int, ...]:
        return input_shape

    def forward(self, x: np.ndarray, ctx: ForwardContext) -> Tuple[np.ndarray, Any]:
        raise NotImplementedError

    def backward(self, dout: np.ndarray, cache: Any) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        raise NotImplementedError

    def param_count(self) -> Tuple[int, int]:
        """(trainable, non-trainable) scalar counts."""
        return (
            sum(p.size for p in self.params.values()),
            sum(s.size for s in self.state.values()),
        )


class ConvTime(Layer):
    def _init(self, input_shape, rng):
        channels, length = input_shape
        filters = self.spec.params["out_channels"]
        k = self.spec.params["kernel_len"]
        if length < k:
            raise ConfigError(f"{self.name}: input length {length} shorter than kernel {k}")
        self.params["weight"] = glorot_uniform((filters, channels, k), channels * k, filters * k, rng)
        self.params["bias"] = np.zeros(filters)
        return (filters, length - k + 1)

    def forward(self, x, ctx):
        return F.conv_time_forward(x, self.params["weight"], self.params["bias"]), x

    def backward(self, dout, cache):
        dx, dw, db = F.conv_time_backward(dout, cache, self.params["weight"])
        return dx, {"weight": dw, "bias": db}


class MaxPoolTime(Layer):
    def _init(self, input_shape, rng):
        channels, length = input_shape
        return (channels, length // self.spec.params["pool_len"])

    def forward(self, x, ctx):
        out, argmax = F.maxpool_time_forward(x, self.spec.params["pool_len"])
        return out, (argmax, x.shape[2])

    def backward(self, dout, cache):
        argmax, length = cache
        return F.maxpool_time_backward(dout, argmax, length, self.spec.params["pool_len"]), {}


class BatchNorm(Layer):
    def _init(self, input_shape, rng):
        channels = self.spec.params["channels"]
        if input_shape[0] != channels:
            raise ConfigError(f"{self.name}: expects {channels} channels, input has {input_shape[0]}")
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.state["running_mean"] = np.zeros(channels)
        self.state["running_var"] = np.ones(channels)
        return input_shape

    def forward(self, x, ctx):
        return F.batchnorm_forward(
            x,
            self.params["gamma"],
            self.params["beta"],
            self.state["running_mean"],
            self.state["running_var"],
            mode=ctx.bn_mode,
            momentum=self.spec.params["momentum"],
            epsilon=self.spec.params["epsilon"],
            update_stats=ctx.update_stats,
        )

    def backward(self, dout, cache):
        dx, dgamma, dbeta = F.batchnorm_backward(dout, self.params["gamma"], cache)
        return dx, {"gamma": dgamma, "beta": dbeta}


class Dropout(Layer):
    def forward(self, x, ctx):
        mode = "train" if ctx.dropout else "infer"
        return F.dropout_forward(x, self.spec.params["rate"], mode, ctx.rng)

    def backward(self, dout, cache):
        return (dout if cache is None else dout * cache), {}


class ReLU(Layer):
    def forward(self, x, ctx):
        return F.relu_forward(x)

    def backward(self, dout, cache):
        return dout * cache, {}


class Flatten(Layer):
    def _init(self, input_shape, rng):
        return (int(np.prod(input_shape)),)

    def forward(self, x, ctx):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, cache):
        return dout.reshape(cache), {}


class Dense(Layer):
    def _init(self, input_shape, rng):
        if len(input_shape) != 1:
            raise ConfigError(f"{self.name}: dense input must be flat, got {input_shape}")
        d = input_shape[0]
        units = self.spec.params["out_units"]
        self.params["weight"] = glorot_uniform((units, d), d, units, rng)
        self.params["bias"] = np.zeros(units)
        return (units,)

    def forward(self, x, ctx):
        return F.dense_forward(x, self.params["weight"], self.params["bias"]), x

    def backward(self, dout, cache):
        dx, dw, db = F.dense_backward(dout, cache, self.params["weight"])
        return dx, {"weight": dw, "bias": db}


LAYER_CLASSES = {
    "conv_time": ConvTime,
    "maxpool_time": MaxPoolTime,
    "batchnorm": BatchNorm,
    "dropout": Dropout,
    "relu": ReLU,
    "flatten": Flatten,
    "dense": Dense,
}


def build_layer(spec: LayerSpec, input_shape: Tuple[int, ...], rng: np.random.Generator) -> Layer:
    return LAYER_CLASSES[spec.kind](spec, input_shape, rng)


def specs_summary(layers: List[Layer]) -> List[Tuple[str, str, Tuple[int, ...], int]]:
    """(name, kind, output shape, parameter count) per layer."""
    return [(l.name, l.spec.kind, l.output_shape, sum(l.param_count())) for l in layers]
