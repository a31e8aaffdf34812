"""
Feed-forward scorer with hand-derived reverse-mode gradients.

Each layer is Linear -> (BatchNorm) -> activation. The per-layer functions
below follow one convention:

    forward:  out, cache = f_forward(x, ...)
    backward: d_x[, d_params...] = f_backward(d_out, cache)

All arithmetic is float64.
"""

import numpy as np
from typing import Dict, List, Optional, Tuple

from rankforge.core.config import settings
from rankforge.core.exceptions import DimensionMismatchError, NumericError, UsageError
from rankforge.core.logging import get_logger
from rankforge.models.network import Activation, Architecture, LayerSpec, Mode, architecture_layers

logger = get_logger(__name__)


# ----- layer primitives -----

def linear_forward(X: np.ndarray, W: np.ndarray, b: np.ndarray):
    """Y = X @ W + b"""
    return X @ W + b, X


def linear_backward(d_out: np.ndarray, X: np.ndarray, W: np.ndarray):
    """Returns (d_X, d_W, d_b)."""
    return d_out @ W.T, X.T @ d_out, d_out.sum(axis=0)


def activation_forward(Z: np.ndarray, kind: Activation, celu_alpha: float = 1.0) -> np.ndarray:
    if kind == Activation.RELU:
        return np.maximum(Z, 0.0)
    if kind == Activation.CELU:
        # expm1 of a clipped argument: no overflow for large positive Z
        return np.where(Z > 0, Z, celu_alpha * np.expm1(np.minimum(Z, 0.0) / celu_alpha))
    return Z


def activation_backward(d_out: np.ndarray, Z: np.ndarray, kind: Activation,
                        celu_alpha: float = 1.0) -> np.ndarray:
    if kind == Activation.RELU:
        return d_out * (Z > 0)
    if kind == Activation.CELU:
        return d_out * np.where(Z > 0, 1.0, np.exp(np.minimum(Z, 0.0) / celu_alpha))
    return d_out


def batchnorm_forward(Z: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
                      running_mean: np.ndarray, running_var: np.ndarray,
                      mode: Mode, momentum: float, eps: float):
    """Batch normalization over the rows of Z.

    Train mode normalizes with the batch (population) statistics and moves the
    running statistics in place; eval mode uses the running statistics only.
    """
    if mode == Mode.TRAIN:
        mean = Z.mean(axis=0)
        var = Z.var(axis=0)
        running_mean *= (1.0 - momentum)
        running_mean += momentum * mean
        running_var *= (1.0 - momentum)
        running_var += momentum * var
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    X_hat = (Z - mean) * inv_std
    return gamma * X_hat + beta, (X_hat, inv_std)


def batchnorm_backward(d_out: np.ndarray, gamma: np.ndarray, cache):
    """Returns (d_Z, d_gamma, d_beta) for a train-mode forward."""
    X_hat, inv_std = cache
    N = d_out.shape[0]
    d_beta = d_out.sum(axis=0)
    d_gamma = (d_out * X_hat).sum(axis=0)
    d_xhat = d_out * gamma
    d_Z = (inv_std / N) * (N * d_xhat - d_xhat.sum(axis=0) - X_hat * (d_xhat * X_hat).sum(axis=0))
    return d_Z, d_gamma, d_beta


# ----- network -----

class ForwardCache:
    """Activations recorded by a forward pass, consumed by ``Network.backward``."""

    def __init__(self, net_id: int, version: int, mode: Mode, layers: List[tuple]):
        self.net_id = net_id
        self.version = version
        self.mode = mode
        self.layers = layers


class Network:
    def __init__(self, layers: List[LayerSpec], seed: int = 0,
                 arch: Optional[Architecture] = None,
                 bn_momentum: float = settings.BN_MOMENTUM,
                 bn_eps: float = settings.BN_EPS,
                 celu_alpha: float = settings.CELU_ALPHA,
                 init: bool = True):
        if not layers:
            raise UsageError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise UsageError(f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")
        if layers[-1].out_dim != 1:
            raise UsageError("the output layer must produce one score per document")

        self.layers = list(layers)
        self.arch = arch
        self.bn_momentum = bn_momentum
        self.bn_eps = bn_eps
        self.celu_alpha = celu_alpha
        self.version = 0
        self.params: Dict[str, np.ndarray] = {}
        self.buffers: Dict[str, np.ndarray] = {}

        rng = np.random.default_rng(seed)
        for i, spec in enumerate(self.layers):
            limit = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
            if init:
                self.params[f"W{i}"] = rng.uniform(-limit, limit, size=(spec.in_dim, spec.out_dim))
            else:
                self.params[f"W{i}"] = np.zeros((spec.in_dim, spec.out_dim))
            self.params[f"b{i}"] = np.zeros(spec.out_dim)
            if spec.batchnorm:
                self.params[f"gamma{i}"] = np.ones(spec.out_dim)
                self.params[f"beta{i}"] = np.zeros(spec.out_dim)
                self.buffers[f"running_mean{i}"] = np.zeros(spec.out_dim)
                self.buffers[f"running_var{i}"] = np.ones(spec.out_dim)

    @classmethod
    def from_architecture(cls, arch: Architecture, in_dim: int,
                          hidden: int = settings.HIDDEN_WIDTH,
                          seed: int = settings.INIT_SEED) -> "Network":
        layers = architecture_layers(arch, in_dim, hidden, settings.NUM_LAYERS)
        return cls(layers, seed=seed, arch=arch)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    def copy(self) -> "Network":
        clone = Network(self.layers, arch=self.arch, bn_momentum=self.bn_momentum,
                        bn_eps=self.bn_eps, celu_alpha=self.celu_alpha, init=False)
        clone.params = {k: v.copy() for k, v in self.params.items()}
        clone.buffers = {k: v.copy() for k, v in self.buffers.items()}
        return clone

    def forward(self, features: np.ndarray, mode: Mode = Mode.EVAL) -> Tuple[np.ndarray, ForwardCache]:
        """Score every row of ``features``."""
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1:
            raise UsageError(f"expected a non-empty m x d feature matrix, got shape {X.shape}")
        if X.shape[1] != self.in_dim:
            raise DimensionMismatchError(f"features have {X.shape[1]} columns, network expects {self.in_dim}")

        records = []
        A = X
        for i, spec in enumerate(self.layers):
            Z, X_in = linear_forward(A, self.params[f"W{i}"], self.params[f"b{i}"])
            bn_cache = None
            if spec.batchnorm:
                Z, bn_cache = batchnorm_forward(
                    Z, self.params[f"gamma{i}"], self.params[f"beta{i}"],
                    self.buffers[f"running_mean{i}"], self.buffers[f"running_var{i}"],
                    mode, self.bn_momentum, self.bn_eps)
            A = activation_forward(Z, spec.activation, self.celu_alpha)
            if not np.all(np.isfinite(A)):
                raise NumericError(f"non-finite activation in layer {i}")
            records.append((X_in, Z, bn_cache))

        return A[:, 0].copy(), ForwardCache(id(self), self.version, mode, records)

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Eval-mode scores; pure with respect to the network state."""
        scores, _ = self.forward(features, Mode.EVAL)
        return scores

    def backward(self, cache: ForwardCache, dL_dscores: np.ndarray) -> Dict[str, np.ndarray]:
        """Gradients of the loss w.r.t. every parameter, keyed like ``params``."""
        if cache.net_id != id(self) or cache.version != self.version:
            raise UsageError("forward cache is stale or belongs to another network")
        if cache.mode != Mode.TRAIN:
            raise UsageError("backward needs a train-mode forward cache")
        d_out = np.asarray(dL_dscores, dtype=np.float64)
        m = cache.layers[0][0].shape[0]
        if d_out.shape != (m,):
            raise UsageError(f"upstream gradient has shape {d_out.shape}, expected ({m},)")

        grads: Dict[str, np.ndarray] = {}
        d_A = d_out[:, None]
        for i in reversed(range(len(self.layers))):
            spec = self.layers[i]
            X_in, Z, bn_cache = cache.layers[i]
            d_Z = activation_backward(d_A, Z, spec.activation, self.celu_alpha)
            if spec.batchnorm:
                d_Z, grads[f"gamma{i}"], grads[f"beta{i}"] = batchnorm_backward(
                    d_Z, self.params[f"gamma{i}"], bn_cache)
            d_A, grads[f"W{i}"], grads[f"b{i}"] = linear_backward(d_Z, X_in, self.params[f"W{i}"])

        return {name: grads[name] for name in self.params}


# ----- optimizer -----

class AdamState:
    def __init__(self, net: Network, beta1: float = settings.ADAM_BETA1,
                 beta2: float = settings.ADAM_BETA2, eps: float = settings.ADAM_EPS):
        self.step = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {k: np.zeros_like(v) for k, v in net.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in net.params.items()}


def adam_step(net: Network, grads: Dict[str, np.ndarray], state: AdamState,
              lr: float = settings.LEARNING_RATE, l2: float = settings.L2_RATE):
    """One Adam update with coupled L2 (``l2 * param`` added to each gradient)."""
    if lr <= 0:
        raise UsageError(f"learning rate must be positive, got {lr}")
    if l2 < 0:
        raise UsageError(f"l2 rate must be non-negative, got {l2}")
    for name, p in net.params.items():
        if name not in grads or grads[name].shape != p.shape or state.m[name].shape != p.shape:
            raise UsageError(f"gradient/state shape mismatch for {name}")

    state.step += 1
    t = state.step
    bias1 = 1.0 - state.beta1 ** t
    bias2 = 1.0 - state.beta2 ** t
    for name, p in net.params.items():
        g = grads[name] + l2 * p if l2 else grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    net.version += 1
    return net, state
