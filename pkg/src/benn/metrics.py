"""Accuracy measures for estimated sufficient predictors."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import RankError, ShapeError
from .ensemble import ensemble_matrix


@dataclass
class MetricReport:
    name: str
    value: float
    n: int
    details: list = field(default_factory=list)
    degenerate: bool = False

    def as_dict(self):
        out = {"metric": self.name, "value": self.value, "n": self.n}
        if self.details:
            out["details"] = list(self.details)
        if self.degenerate:
            out["degenerate"] = True
        return out


@dataclass(frozen=True)
class DcorResult:
    value: float
    degenerate: bool


def _as_2d(a):
    a = np.asarray(a, dtype=np.float64)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def double_center(d):
    """``d - row means - column means + grand mean``."""
    return d - d.mean(axis=0, keepdims=True) - d.mean(axis=1, keepdims=True) + d.mean()


def distance_correlation(a, b, with_flag=False):
    """Biased (V-statistic) sample distance correlation of two samples.

    Rows are observations. A sample with zero distance variance yields 0;
    pass ``with_flag=True`` to get a :class:`DcorResult` reporting that.
    """
    a, b = _as_2d(a), _as_2d(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"samples have {a.shape[0]} and {b.shape[0]} rows")
    if a.shape[0] < 2:
        raise ShapeError("distance correlation needs at least two observations")
    A = double_center(cdist(a, a))
    B = double_center(cdist(b, b))
    dcov2 = float(np.mean(A * B))
    dvar_a = float(np.mean(A * A))
    dvar_b = float(np.mean(B * B))
    if dvar_a <= 0.0 or dvar_b <= 0.0:
        res = DcorResult(0.0, True)
    else:
        r2 = max(dcov2, 0.0) / np.sqrt(dvar_a * dvar_b)
        res = DcorResult(float(min(np.sqrt(r2), 1.0)), False)
    return res if with_flag else res.value


def projection_matrix(b):
    b = _as_2d(b)
    q, r = np.linalg.qr(b)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() <= 1e-12 * max(diag.max(), 1.0):
        raise RankError("basis matrix is not of full column rank")
    return q @ q.T


def projection_distance(b1, b2):
    """Frobenius distance between the orthogonal projections onto span(b1), span(b2)."""
    b1, b2 = _as_2d(b1), _as_2d(b2)
    if b1.shape[0] != b2.shape[0]:
        raise ShapeError(f"bases live in R^{b1.shape[0]} and R^{b2.shape[0]}")
    return float(np.linalg.norm(projection_matrix(b1) - projection_matrix(b2), "fro"))


def ensemble_mse(result, X_test, y_test):
    """Held-out version of the training objective, using the training ensemble."""
    from .trainer import predict_ensemble

    spec = result.ensemble
    G = ensemble_matrix(spec, y_test)
    pred = predict_ensemble(result, X_test)
    if pred.shape != G.shape:
        raise ShapeError(f"predictions {pred.shape} vs targets {G.shape}")
    n, m = G.shape
    return float(spec.tau * np.sum((G - pred) ** 2) / (n * m))
