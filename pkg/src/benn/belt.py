"""Belt placement: how the dimension-reduction target maps onto a BENN shape."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ModeError
from .network import BennModel, StructuralParams, init_network

TAGS = ("nonlinear-cs", "linear-cs", "linear-cms", "nonlinear-cms", "kth-moment",
        "categorical")
LINEAR_TAGS = ("linear-cs", "linear-cms")

# ensemble family each mode forces, if any
_FORCED_FAMILY = {
    "linear-cms": "identity",
    "nonlinear-cms": "identity",
    "kth-moment": "moments",
    "categorical": "categorical-indicator",
}


@dataclass(frozen=True)
class BeltMode:
    tag: str
    k: int | None = None

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ConfigurationError(f"unknown belt mode {self.tag!r}")
        needs_k = self.tag in ("kth-moment", "categorical")
        if needs_k and (self.k is None or int(self.k) < 1):
            raise ConfigurationError(f"{self.tag} needs a positive integer argument")
        if not needs_k and self.k is not None:
            raise ConfigurationError(f"{self.tag} takes no argument")

    @property
    def is_linear(self):
        return self.tag in LINEAR_TAGS

    def __str__(self):
        return self.tag if self.k is None else f"{self.tag}({self.k})"

    @classmethod
    def parse(cls, text):
        """Parse ``"linear-cs"``, ``"kth-moment(3)"``, ``"categorical(4)"``."""
        match = re.fullmatch(r"\s*([a-z-]+)\s*(?:\(\s*(\d+)\s*\))?\s*", str(text))
        if not match:
            raise ConfigurationError(f"cannot parse belt mode {text!r}")
        tag, k = match.groups()
        return cls(tag, int(k) if k is not None else None)


def check_params(mode: BeltMode, params: StructuralParams):
    if mode.is_linear and params.l1 != 0:
        raise ConfigurationError(
            f"{mode} requires l1 = 0 (the belt sits right after the input), got l1={params.l1}")
    if mode.tag == "kth-moment" and params.m != mode.k:
        raise ConfigurationError(f"{mode} requires m = k = {mode.k}, got m={params.m}")
    if mode.tag == "categorical" and params.m != mode.k:
        raise ConfigurationError(f"{mode} requires m = K = {mode.k}, got m={params.m}")
    if mode.tag == "linear-cms" and params.m != 1:
        raise ConfigurationError(f"{mode} with a scalar response requires m = 1")


def check_ensemble(mode: BeltMode, spec, params: StructuralParams | None = None):
    """Raise if the ensemble family or size contradicts the belt mode."""
    forced = _FORCED_FAMILY.get(mode.tag)
    if forced is not None and spec.family != forced:
        raise ConfigurationError(f"{mode} requires the {forced} ensemble, got {spec.family}")
    if mode.tag == "kth-moment" and tuple(spec.points) != tuple(range(1, mode.k + 1)):
        raise ConfigurationError(f"{mode} requires exponents 1..{mode.k}")
    if params is not None and spec.m != params.m:
        raise ConfigurationError(f"ensemble size {spec.m} differs from output width m={params.m}")


def build_benn(mode: BeltMode, params: StructuralParams, seed=0,
               scheme="zeros-bias-uniform-weight") -> BennModel:
    """Seeded BENN whose sub-network shapes realize ``mode``."""
    if isinstance(mode, str):
        mode = BeltMode.parse(mode)
    check_params(mode, params)
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    f_seed, h_seed = seed.spawn(2)
    f_act = "none" if mode.is_linear else "relu-on-hidden"
    f_net = init_network(params.p, params.k1, params.d, f_seed, scheme, activation=f_act)
    h_net = init_network(params.d, params.k2, params.m, h_seed, scheme)
    return BennModel(f_net, h_net, mode, params)


def extract_linear_basis(model: BennModel):
    """The ``p x d`` matrix B whose column span is the estimated subspace.

    Defined for linear modes and for any belt with ``l1 = 0`` (for example
    ``kth-moment(k)`` used for the k-th central moment subspace).
    """
    if not (model.mode.is_linear or len(model.f_net.weights) == 1):
        raise ModeError(f"no linear basis for belt mode {model.mode} with hidden f layers")
    return np.array(model.f_net.weights[0].T)
