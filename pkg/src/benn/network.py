"""Dense ReLU networks and the two-stage BENN model built from them.

A network with hidden widths ``(k_1, ..., k_L)`` is the map

    x -> A_{L+1}(relu(A_L(... relu(A_1(x)) ...)))

where ``A_l(x) = W_l x + b_l`` and ``W_l`` has shape ``(k_l, k_{l-1})``.
The last affine layer never gets an activation. A BENN is ``h o f`` with
``f: R^p -> R^d`` (the dimension reducer, ending in the narrow "belt") and
``h: R^d -> R^m`` (the ensemble regressor).

Everything here is float64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, ShapeError

ACTIVATIONS = ("relu-on-hidden", "none")
INIT_SCHEMES = ("uniform-fan-in", "zeros-bias-uniform-weight")


def _as_widths(widths, depth, name):
    if widths is None:
        widths = ()
    if isinstance(widths, (int, np.integer)):
        widths = (int(widths),) * depth
    widths = tuple(int(k) for k in widths)
    if len(widths) != depth:
        raise ParameterError(f"{name} has {len(widths)} entries but depth is {depth}")
    if any(k < 1 for k in widths):
        raise ParameterError(f"all widths in {name} must be >= 1, got {widths}")
    return widths


@dataclass(frozen=True)
class StructuralParams:
    """Shape of a BENN: ``(p, l1, k1, d, l2, k2, m)`` plus the weight bound.

    ``k1``/``k2`` accept a single integer as constant-width shorthand.
    ``b_w=None`` means the parameters are unbounded.
    """

    p: int
    l1: int
    k1: tuple
    d: int
    l2: int
    k2: tuple
    m: int
    b_w: float | None = None

    def __post_init__(self):
        for name in ("p", "d", "m"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be a positive integer")
        for name in ("l1", "l2"):
            if int(getattr(self, name)) < 0:
                raise ParameterError(f"{name} must be a non-negative integer")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "l1", int(self.l1))
        object.__setattr__(self, "l2", int(self.l2))
        object.__setattr__(self, "k1", _as_widths(self.k1, self.l1, "k1"))
        object.__setattr__(self, "k2", _as_widths(self.k2, self.l2, "k2"))
        if self.d >= self.p:
            raise ParameterError(f"belt width d={self.d} must be smaller than p={self.p}")
        if self.b_w is not None:
            if not self.b_w > 0:
                raise ParameterError("b_w must be positive or None (unbounded)")
            object.__setattr__(self, "b_w", float(self.b_w))

    @classmethod
    def from_tuple(cls, p, l1, r1, d, l2, r2, m, b_w=None):
        """Build from the constant-width 7-tuple ``(p, l1, r1, d, l2, r2, m)``."""
        return cls(p=p, l1=l1, k1=r1, d=d, l2=l2, k2=r2, m=m, b_w=b_w)

    def as_dict(self):
        return {
            "p": self.p, "l1": self.l1, "k1": list(self.k1), "d": self.d,
            "l2": self.l2, "k2": list(self.k2), "m": self.m, "b_w": self.b_w,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(p=data["p"], l1=data["l1"], k1=data["k1"], d=data["d"],
                   l2=data["l2"], k2=data["k2"], m=data["m"], b_w=data.get("b_w"))


@dataclass(frozen=True)
class DenseNet:
    """Ordered affine layers plus an activation policy.

    Arrays are copied and frozen on construction; use :meth:`replace_params`
    to obtain an updated network.
    """

    weights: tuple
    biases: tuple
    activation: str = "relu-on-hidden"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ParameterError(f"unknown activation {self.activation!r}")
        if len(self.weights) == 0 or len(self.weights) != len(self.biases):
            raise ShapeError("a network needs matching, non-empty weight and bias lists")
        ws, bs = [], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.array(w, dtype=np.float64, copy=True)
            b = np.array(b, dtype=np.float64, copy=True).reshape(-1)
            if w.ndim != 2 or w.shape[0] != b.shape[0]:
                raise ShapeError(f"layer {i}: weight {w.shape} does not match bias {b.shape}")
            if i > 0 and w.shape[1] != ws[-1].shape[0]:
                raise ShapeError(
                    f"layer {i} expects {w.shape[1]} inputs but layer {i - 1} "
                    f"produces {ws[-1].shape[0]}")
            w.setflags(write=False)
            b.setflags(write=False)
            ws.append(w)
            bs.append(b)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def in_dim(self):
        return self.weights[0].shape[1]

    @property
    def out_dim(self):
        return self.weights[-1].shape[0]

    @property
    def depth(self):
        """Number of hidden layers."""
        return len(self.weights) - 1

    @property
    def widths(self):
        return tuple(w.shape[0] for w in self.weights[:-1])

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self):
        """Flat list ``[W1, b1, W2, b2, ...]`` (read-only views)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def replace_params(self, params):
        return DenseNet(tuple(params[0::2]), tuple(params[1::2]), self.activation)

    def max_abs_param(self):
        return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in self.params())


@dataclass(frozen=True)
class BennModel:
    f_net: DenseNet
    h_net: DenseNet
    mode: object
    params: StructuralParams = field(repr=False)

    def __post_init__(self):
        if self.f_net.out_dim != self.h_net.in_dim:
            raise ShapeError(
                f"belt mismatch: f outputs {self.f_net.out_dim}, h expects {self.h_net.in_dim}")
        if self.f_net.out_dim != self.params.d:
            raise ShapeError("f_net output dimension differs from params.d")


def init_network(in_dim, widths: Sequence[int], out_dim, seed=0,
                 scheme="zeros-bias-uniform-weight", activation="relu-on-hidden"):
    """Seeded random network of the requested shape.

    Weights are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)). Under
    ``uniform-fan-in`` biases use the same law; under
    ``zeros-bias-uniform-weight`` they start at zero.
    """
    if scheme not in INIT_SCHEMES:
        raise ParameterError(f"unknown init scheme {scheme!r}")
    widths = [int(k) for k in widths]
    dims = [int(in_dim), *widths, int(out_dim)]
    if any(k < 1 for k in dims):
        raise ShapeError(f"all layer dimensions must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        ws.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        if scheme == "uniform-fan-in":
            bs.append(rng.uniform(-bound, bound, size=fan_out))
        else:
            bs.append(np.zeros(fan_out))
    return DenseNet(tuple(ws), tuple(bs), activation)


def forward_arrays(weights, biases, x, activation="relu-on-hidden"):
    """Forward pass on raw arrays; ``x`` is ``(n, in_dim)``."""
    a = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        a = a @ w.T + b
        if i < last and activation == "relu-on-hidden":
            a = np.maximum(a, 0.0)
    return a


def forward(net: DenseNet, x):
    """Evaluate ``net`` at a single input vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = x.reshape(1, -1) if single else x
    if x2.ndim != 2 or x2.shape[1] != net.in_dim:
        raise ShapeError(f"input has {x2.shape[-1]} features, network expects {net.in_dim}")
    out = forward_arrays(net.weights, net.biases, x2, net.activation)
    return out[0] if single else out


def benn_forward(model: BennModel, x):
    """Return ``(z, y_tilde)`` where ``z = f(x)`` and ``y_tilde = h(z)``."""
    z = forward(model.f_net, x)
    return z, forward(model.h_net, z)


def truncate(v, b):
    """Clamp every component into ``[-b, b]``."""
    if not b > 0:
        raise ParameterError(f"truncation bound must be positive, got {b}")
    return np.clip(np.asarray(v, dtype=np.float64), -b, b)


def clip_weights(net: DenseNet, b_w) -> DenseNet:
    if not b_w > 0:
        raise ParameterError(f"weight bound must be positive, got {b_w}")
    return net.replace_params([np.clip(a, -b_w, b_w) for a in net.params()])
