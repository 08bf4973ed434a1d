"""Text weights file.

Line 1 is the architecture descriptor; every following line is
``name shape [nontrainable] v1 v2 ...`` with values in row-major order.
"""

from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from ..utils.errors import IngestionError
from .layers import LayerSpec
from .network import Network


ARCH_PREFIX = "arch"
NONTRAINABLE = "nontrainable"


def architecture_descriptor(model: Network) -> str:
    channels, length = model.input_shape
    tokens = [ARCH_PREFIX, f"n_channels={channels}", f"input_len={length}", f"seed={model.seed}"]
    tokens += [spec.to_token() for spec in model.specs]
    return " ".join(tokens)


def _format_tensor(name: str, value: np.ndarray, nontrainable: bool) -> str:
    shape = "x".join(str(s) for s in value.shape)
    head = [name, shape] + ([NONTRAINABLE] if nontrainable else [])
    return " ".join(head + [repr(float(v)) for v in value.reshape(-1)])


def save_weights(model: Network, path: Union[str, Path]) -> None:
    """Write the model's architecture, parameters and running statistics."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(architecture_descriptor(model) + "\n")
        for name, value in model.parameters().items():
            f.write(_format_tensor(name, value, False) + "\n")
        for name, value in model.states().items():
            f.write(_format_tensor(name, value, True) + "\n")


def parse_descriptor(line: str, path: str = "") -> Tuple[Tuple[int, int], int, list]:
    tokens = line.split()
    if not tokens or tokens[0] != ARCH_PREFIX:
        raise IngestionError("weights file must start with an 'arch' descriptor", path, 1)
    header = {}
    specs = []
    for token in tokens[1:]:
        if "/" in token:
            specs.append(LayerSpec.from_token(token))
        else:
            key, _, value = token.partition("=")
            header[key] = int(value)
    try:
        return (header["n_channels"], header["input_len"]), header.get("seed", 0), specs
    except KeyError as e:
        raise IngestionError(f"descriptor is missing {e}", path, 1)


def load_weights(path: Union[str, Path]) -> Network:
    """Rebuild a network from a weights file.

    Raises:
        IngestionError: Malformed file or tensors that do not fit the architecture
    """
    path_str = str(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise IngestionError(f"cannot read weights: {e}", path_str)
    if not lines:
        raise IngestionError("weights file is empty", path_str, 1)

    input_shape, seed, specs = parse_descriptor(lines[0], path_str)
    model = Network(specs, input_shape, seed=seed)
    targets: Dict[str, np.ndarray] = dict(model.parameters())
    targets.update(model.states())

    seen = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 2:
            raise IngestionError("expected 'name shape values...'", path_str, line_no)
        name, shape_text = parts[0], parts[1]
        values = parts[3:] if len(parts) > 2 and parts[2] == NONTRAINABLE else parts[2:]
        if name not in targets:
            raise IngestionError(f"unknown tensor '{name}'", path_str, line_no)
        try:
            shape = tuple(int(s) for s in shape_text.split("x"))
            numbers = np.array([float(v) for v in values])
        except ValueError as e:
            raise IngestionError(f"tensor '{name}': {e}", path_str, line_no)
        if shape != targets[name].shape or len(values) != targets[name].size:
            raise IngestionError(
                f"tensor '{name}' has shape {shape} with {len(values)} values, "
                f"architecture needs {targets[name].shape}",
                path_str, line_no,
            )
        targets[name][...] = numbers.reshape(shape)
        seen.add(name)

    missing = sorted(set(targets) - seen)
    if missing:
        raise IngestionError(f"missing tensors: {', '.join(missing)}", path_str)
    return model
