"""Response-transformation families ("ensembles").

An ensemble is a finite family ``g(., t_1), ..., g(., t_m)`` whose conditional
expectations given X jointly describe the conditional law of Y. The network's
output layer regresses these m transforms, so the target matrix is
``G[i, j] = g(y_i, t_j)``.

Supported families:

``moments``                ``z**k`` for exponents k, on z-scored y
``cdf-indicator``          ``1(y <= c_j)`` on a data-driven threshold grid
``fourier``                alternating ``sin(t y)``, ``cos(t y)``
``gauss-kernel``           ``exp(-(y_j - y)**2 / (2 sigma**2))``
``identity``               ``y`` itself (conditional-mean targets)
``categorical-indicator``  ``1(y == class_j)``
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateResponseError, ParameterError, ShapeError

FAMILIES = ("moments", "cdf-indicator", "fourier", "gauss-kernel", "identity",
            "categorical-indicator")
# families whose values are bounded by 1 regardless of the data
_BOUNDED = ("cdf-indicator", "fourier", "gauss-kernel", "categorical-indicator")


@dataclass(frozen=True)
class EnsembleSpec:
    """A fully specified ensemble.

    ``points`` holds the family parameter for each output: exponents,
    thresholds, frequencies, kernel anchors or class labels. For
    ``identity`` it is empty and ``m`` is the response dimension.
    ``center``/``scale`` standardize y before a ``moments`` transform.
    """

    family: str
    m: int
    points: tuple = ()
    tau: float = 1.0
    sigma: float | None = None
    b_y: float = 1.0
    center: float = 0.0
    scale: float = 1.0
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown ensemble family {self.family!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "points", tuple(float(v) for v in self.points))
        if self.m < 1:
            raise ParameterError("ensemble size m must be >= 1")
        if not self.tau > 0:
            raise ParameterError("tau must be positive")
        if not self.b_y > 0:
            raise ParameterError("b_y must be positive")
        if not self.scale > 0:
            raise ParameterError("scale must be positive")
        if self.family == "gauss-kernel" and not (self.sigma and self.sigma > 0):
            raise ParameterError("gauss-kernel needs a positive bandwidth sigma")
        if self.family == "fourier":
            if len(self.points) != math.ceil(self.m / 2):
                raise ParameterError("fourier needs ceil(m/2) frequencies")
        elif self.family != "identity" and len(self.points) != self.m:
            raise ParameterError(
                f"{self.family} needs exactly m={self.m} points, got {len(self.points)}")

    @property
    def t_grid(self):
        """Nominal equally spaced grid ``t_j = (j-1) tau / m`` indexing the outputs."""
        return make_grid(self.tau, self.m)

    def as_dict(self):
        return {
            "family": self.family, "m": self.m, "points": list(self.points),
            "tau": self.tau, "sigma": self.sigma, "b_y": self.b_y,
            "center": self.center, "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(family=data["family"], m=data["m"], points=data.get("points", ()),
                   tau=data.get("tau", 1.0), sigma=data.get("sigma"),
                   b_y=data.get("b_y", 1.0), center=data.get("center", 0.0),
                   scale=data.get("scale", 1.0))


def make_grid(tau, m):
    """Equally spaced grid ``0 = t_1 < ... < t_m < tau`` with spacing ``tau/m``."""
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    if int(m) != m or m < 1:
        raise ParameterError(f"m must be a positive integer, got {m}")
    return np.arange(int(m), dtype=np.float64) * (tau / m)


def _mean_sd(y):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size < 2 or np.ptp(y) == 0:
        raise DegenerateResponseError("response must have at least two distinct values")
    return float(y.mean()), float(y.std(ddof=1))


def build_gauss_ensemble(y_train, m, seed=0):
    """Gaussian-kernel ensemble with anchors drawn uniformly on mean +/- 2 SD.

    The bandwidth is the sample SD of ``y_train``.
    """
    mu, sd = _mean_sd(y_train)
    rng = np.random.default_rng(seed)
    anchors = rng.uniform(mu - 2 * sd, mu + 2 * sd, size=int(m))
    return EnsembleSpec("gauss-kernel", m=m, points=anchors, sigma=sd, b_y=1.0)


def build_moment_ensemble(y_train, k):
    """Moments ``z, z**2, ..., z**k`` of the training-standardized response.

    ``b_y`` is the largest absolute transform seen on the training data.
    """
    mu, sd = _mean_sd(y_train)
    z = (np.asarray(y_train, dtype=np.float64) - mu) / sd
    b_y = max(float(np.max(np.abs(z) ** e)) for e in range(1, int(k) + 1))
    return EnsembleSpec("moments", m=k, points=range(1, int(k) + 1), center=mu,
                        scale=sd, b_y=max(b_y, 1.0))


def build_cdf_ensemble(y_train, m, tau=1.0):
    """Indicator ensemble on a grid mapped onto ``[min(y) - sd, max(y) + sd]``."""
    mu, sd = _mean_sd(y_train)
    y = np.asarray(y_train, dtype=np.float64)
    lo, hi = float(y.min()) - sd, float(y.max()) + sd
    thresholds = lo + make_grid(tau, m) / tau * (hi - lo)
    return EnsembleSpec("cdf-indicator", m=m, points=thresholds, tau=tau, b_y=1.0)


def build_fourier_ensemble(m, tau=1.0):
    freqs = make_grid(tau, math.ceil(int(m) / 2))
    return EnsembleSpec("fourier", m=m, points=freqs, tau=tau, b_y=1.0)


def identity_ensemble(y_train=None, q=1):
    """Identity family; ``b_y`` is the training max of ``|y|`` when given."""
    b_y = 1.0
    if y_train is not None:
        b_y = max(float(np.max(np.abs(np.asarray(y_train, dtype=np.float64)))), 1.0)
    return EnsembleSpec("identity", m=q, b_y=b_y)


def build_categorical_ensemble(y_train):
    classes = np.unique(np.asarray(y_train, dtype=np.float64))
    return EnsembleSpec("categorical-indicator", m=classes.size, points=classes, b_y=1.0)


def _transform(spec, y):
    """Vectorized family formula; ``y`` is 1-D (or 2-D for identity)."""
    fam = spec.family
    if fam == "identity":
        return y.reshape(y.shape[0], -1)
    pts = np.asarray(spec.points)
    col = y.reshape(-1, 1)
    if fam == "moments":
        z = (col - spec.center) / spec.scale
        return z ** pts
    if fam == "cdf-indicator":
        return (col <= pts).astype(np.float64)
    if fam == "gauss-kernel":
        return np.exp(-((pts - col) ** 2) / (2.0 * spec.sigma ** 2))
    if fam == "categorical-indicator":
        return (col == pts).astype(np.float64)
    # fourier: component j uses frequency j // 2, sin for even j, cos for odd j
    j = np.arange(spec.m)
    t = pts[j // 2]
    arg = col * t
    return np.where(j % 2 == 0, np.sin(arg), np.cos(arg))


def _check_bound(spec, G):
    big = float(np.max(np.abs(G))) if G.size else 0.0
    if big <= spec.b_y * (1 + 1e-12):
        return
    msg = f"{spec.family} ensemble value {big:.4g} exceeds bound b_y={spec.b_y:.4g}"
    if spec.family in _BOUNDED:
        raise ParameterError(msg)
    # data-driven bound (training max); new data may legitimately exceed it
    warnings.warn(msg, RuntimeWarning, stacklevel=3)


def apply_ensemble(spec: EnsembleSpec, y):
    """Transform one response value into its length-m ensemble vector."""
    y = np.asarray(y, dtype=np.float64)
    if spec.family == "identity":
        row = y.reshape(1, -1)
        if row.shape[1] != spec.m:
            raise ShapeError(f"identity ensemble expects {spec.m}-dim response")
    else:
        if y.size != 1:
            raise ShapeError("scalar response expected")
        row = y.reshape(1)
    return _transform(spec, row)[0]


def ensemble_matrix(spec: EnsembleSpec, y):
    """The ``n x m`` target matrix ``G[i, j] = g(y_i, t_j)``."""
    y = np.asarray(y, dtype=np.float64)
    if spec.family == "identity":
        y2 = y.reshape(y.shape[0], -1)
        if y2.shape[1] != spec.m:
            raise ShapeError(f"identity ensemble expects {spec.m}-dim response, "
                             f"got {y2.shape[1]}")
        G = y2.copy()
    else:
        if y.ndim != 1:
            raise ShapeError("ensemble_matrix expects a 1-D response vector")
        G = _transform(spec, y)
    _check_bound(spec, G)
    return G
