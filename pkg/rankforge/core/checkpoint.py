"""
Text checkpoints.

    rankforge-ckpt v1
    arch R4.L
    layers 5
    layer 136 100 relu 1
    ...
    tensor W0 2 136 100
    <values, 17 significant digits, whitespace separated>
    ...
    end

Floats are printed with 17 significant digits, which round-trips float64
exactly.
"""

import numpy as np
from pathlib import Path
from typing import Dict, List, Union

from rankforge.core.exceptions import CheckpointError
from rankforge.core.logging import get_logger
from rankforge.core.numerics import Network
from rankforge.models.network import Activation, Architecture, LayerSpec

logger = get_logger(__name__)

HEADER = "rankforge-ckpt v1"
VALUES_PER_LINE = 8


def _format_tensor(name: str, arr: np.ndarray) -> List[str]:
    lines = [f"tensor {name} {arr.ndim} " + " ".join(str(s) for s in arr.shape)]
    flat = arr.ravel()
    for start in range(0, flat.size, VALUES_PER_LINE):
        lines.append(" ".join(format(float(x), ".17g") for x in flat[start:start + VALUES_PER_LINE]))
    return lines


def dumps_checkpoint(net: Network) -> str:
    lines = [
        HEADER,
        f"arch {net.arch.value if net.arch is not None else 'custom'}",
        f"bn {format(net.bn_momentum, '.17g')} {format(net.bn_eps, '.17g')}",
        f"celu {format(net.celu_alpha, '.17g')}",
        f"layers {len(net.layers)}",
    ]
    for spec in net.layers:
        lines.append(f"layer {spec.in_dim} {spec.out_dim} {spec.activation.value} {int(spec.batchnorm)}")
    for name, arr in list(net.params.items()) + list(net.buffers.items()):
        lines.extend(_format_tensor(name, arr))
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads_checkpoint(text: str) -> Network:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    pos = 0

    def take(prefix: str) -> List[str]:
        nonlocal pos
        if pos >= len(lines):
            raise CheckpointError(f"unexpected end of checkpoint, expected '{prefix}'")
        toks = lines[pos].split()
        if toks[0] != prefix:
            raise CheckpointError(f"checkpoint line {pos + 1}: expected '{prefix}', got '{toks[0]}'")
        pos += 1
        return toks[1:]

    if not lines or lines[0] != HEADER:
        raise CheckpointError(f"not a checkpoint: missing header '{HEADER}'")
    pos = 1
    try:
        arch_tok = take("arch")[0]
        arch = None if arch_tok == "custom" else Architecture(arch_tok)
        bn_momentum, bn_eps = (float(x) for x in take("bn"))
        celu_alpha = float(take("celu")[0])
        n_layers = int(take("layers")[0])
        layers = []
        for _ in range(n_layers):
            in_dim, out_dim, act, bn = take("layer")
            layers.append(LayerSpec(in_dim=int(in_dim), out_dim=int(out_dim),
                                    activation=Activation(act), batchnorm=bool(int(bn))))
        net = Network(layers, arch=arch, bn_momentum=bn_momentum, bn_eps=bn_eps,
                      celu_alpha=celu_alpha, init=False)

        tensors: Dict[str, np.ndarray] = {}
        while pos < len(lines) and lines[pos] != "end":
            head = take("tensor")
            name, ndim = head[0], int(head[1])
            shape = tuple(int(s) for s in head[2:2 + ndim])
            size = int(np.prod(shape)) if shape else 1
            values: List[float] = []
            while len(values) < size:
                if pos >= len(lines):
                    raise CheckpointError(f"tensor {name} is truncated")
                values.extend(float(x) for x in lines[pos].split())
                pos += 1
            if len(values) != size:
                raise CheckpointError(f"tensor {name} has {len(values)} values, expected {size}")
            tensors[name] = np.array(values, dtype=np.float64).reshape(shape)
        if pos >= len(lines):
            raise CheckpointError("checkpoint is missing its 'end' marker")
    except (ValueError, IndexError) as e:
        raise CheckpointError(f"corrupt checkpoint: {e}") from e

    for store in (net.params, net.buffers):
        for name, current in store.items():
            if name not in tensors:
                raise CheckpointError(f"checkpoint is missing tensor {name}")
            if tensors[name].shape != current.shape:
                raise CheckpointError(f"tensor {name} has shape {tensors[name].shape}, expected {current.shape}")
            store[name] = tensors[name]
    return net


def save_checkpoint(net: Network, path: Union[str, Path]) -> Path:
    """Write a network checkpoint to disk."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_checkpoint(net), encoding="utf-8")
    logger.info(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Network:
    """Read a network checkpoint from disk."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    return loads_checkpoint(path.read_text(encoding="utf-8"))
