"""Sequential network with a recorded forward tape and reverse-mode backward."""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ShapeError
from .layers import ForwardContext, Layer, LayerSpec, build_layer


@dataclass
class Tape:
    """Caches recorded by a forward pass, one entry per executed layer."""

    entries: List[Tuple[int, object]] = field(default_factory=list)
    input_shape: Optional[Tuple[int, ...]] = None


class Network:
    """Fixed sequence of layers over (channels, time) input.

    Args:
        specs: Layer specifications in execution order
        input_shape: (n_channels, n_samples) of one example
        seed: Seed for weight initialization
    """

    def __init__(self, specs: Sequence[LayerSpec], input_shape: Tuple[int, int], seed: int = 0):
        self.specs = list(specs)
        self.input_shape = tuple(input_shape)
        self.seed = seed
        rng = np.random.default_rng(seed)

        self.layers: List[Layer] = []
        shape = self.input_shape
        for spec in self.specs:
            layer = build_layer(spec, shape, rng)
            self.layers.append(layer)
            shape = layer.output_shape

    @property
    def n_channels(self) -> int:
        return self.input_shape[0]

    def layer_index(self, name: str) -> int:
        for idx, layer in enumerate(self.layers):
            if layer.name == name:
                return idx
        raise KeyError(f"No layer named '{name}'")

    def output_shapes(self) -> List[Tuple[int, ...]]:
        return [layer.output_shape for layer in self.layers]

    def parameters(self) -> "OrderedDict[str, np.ndarray]":
        """Trainable tensors keyed ``<layer>.<param>``, in layer order (live references)."""
        out = OrderedDict()
        for layer in self.layers:
            for key, value in layer.params.items():
                out[f"{layer.name}.{key}"] = value
        return out

    def states(self) -> "OrderedDict[str, np.ndarray]":
        """Non-trainable tensors (batch-norm running statistics)."""
        out = OrderedDict()
        for layer in self.layers:
            for key, value in layer.state.items():
                out[f"{layer.name}.{key}"] = value
        return out

    def param_count(self) -> Tuple[int, int]:
        trainable = sum(layer.param_count()[0] for layer in self.layers)
        non_trainable = sum(layer.param_count()[1] for layer in self.layers)
        return trainable, non_trainable

    def forward(
        self,
        x: np.ndarray,
        ctx: Optional[ForwardContext] = None,
        upto: Optional[int] = None,
        record: bool = True,
    ) -> Tuple[np.ndarray, Optional[Tape]]:
        """Run layers ``[0, upto)`` on a batch.

        Args:
            x: Batch (B, C, L)
            ctx: Mode of the stochastic/stateful layers; defaults to inference
            upto: Stop before this layer index (None runs the whole network)
            record: Keep caches for a later backward pass

        Returns:
            (activations, tape or None)
        """
        if x.ndim != 3 or x.shape[1:] != self.input_shape:
            raise ShapeError(f"Network expects (B, {self.input_shape[0]}, {self.input_shape[1]}), got {x.shape}")
        ctx = ctx or ForwardContext(bn_mode="infer", dropout=False, update_stats=False)

        tape = Tape(input_shape=x.shape) if record else None
        stop = len(self.layers) if upto is None else upto
        out = x
        for idx in range(stop):
            out, cache = self.layers[idx].forward(out, ctx)
            if record:
                tape.entries.append((idx, cache))
        return out, tape

    def backward(self, tape: Optional[Tape], dout: np.ndarray) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
        """Reverse-mode accumulation over the recorded layers.

        Args:
            tape: Tape from a recorded forward pass
            dout: Gradient of the loss w.r.t. the last recorded activation

        Returns:
            (parameter gradients keyed like ``parameters()``, input gradient)

        Raises:
            RuntimeError: No recorded forward pass
        """
        if tape is None or not tape.entries:
            raise RuntimeError("backward called without a recorded forward pass")

        grads: Dict[str, np.ndarray] = {}
        grad = dout
        for idx, cache in reversed(tape.entries):
            layer = self.layers[idx]
            grad, layer_grads = layer.backward(grad, cache)
            for key, value in layer_grads.items():
                grads[f"{layer.name}.{key}"] = value
        for name, value in self.parameters().items():
            grads.setdefault(name, np.zeros_like(value))
        return grads, grad
