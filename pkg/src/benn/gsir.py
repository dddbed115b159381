"""Reference kernel nonlinear SDR (generalized sliced inverse regression).

Used as the O(n^3) baseline in timing and accuracy comparisons. With
centered Gaussian Gram matrices ``Gx``, ``Gy`` and ridge parameters
``eps_x``, ``eps_y`` the method takes the leading eigenvectors ``v`` of

    M = (Gx + eps_x n I)^-1 Gx  R_y  Gx (Gx + eps_x n I)^-1,
    R_y = (Gy + eps_y n I)^-1 Gy,

and reports the sufficient predictors ``Gx v``. Every step is a dense n x n
factorization or product, which is the cost the neural estimator avoids.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.spatial.distance import cdist, pdist

from .errors import BandwidthError, NumericalError, ParameterError, ShapeError

MEDIAN = "median-heuristic"


@dataclass(frozen=True)
class GsirConfig:
    sigma_x: float | str = MEDIAN
    sigma_y: float | str = MEDIAN
    eps_x: float = 1e-3
    eps_y: float = 1e-3
    d: int = 1

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y"):
            v = getattr(self, name)
            if v != MEDIAN and not float(v) > 0:
                raise ParameterError(f"{name} must be positive or {MEDIAN!r}")
        if not (self.eps_x > 0 and self.eps_y > 0):
            raise ParameterError("ridge parameters must be positive")
        if int(self.d) < 1:
            raise ParameterError("d must be >= 1")


def _rows(a):
    a = np.asarray(a, dtype=np.float64)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def median_bandwidth(X):
    """Median pairwise Euclidean distance between rows."""
    X = _rows(X)
    if X.shape[0] < 2:
        raise BandwidthError("median heuristic needs at least two rows")
    dist = pdist(X)
    sigma = float(np.median(dist))
    if not sigma > 0:
        raise BandwidthError("median pairwise distance is zero (too many repeated rows)")
    return sigma


def _resolve(sigma, X):
    return median_bandwidth(X) if sigma == MEDIAN else float(sigma)


def gram(X, sigma=MEDIAN, Z=None):
    """Gaussian Gram matrix ``exp(-||x_i - z_j||^2 / (2 sigma^2))``; Z defaults to X."""
    X = _rows(X)
    sigma = _resolve(sigma, X)
    if not sigma > 0:
        raise BandwidthError("bandwidth must be positive")
    Z = X if Z is None else _rows(Z)
    d2 = cdist(X, Z, "sqeuclidean")
    K = np.exp(-d2 / (2.0 * sigma * sigma))
    if Z is X:
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, 1.0)
    return K


def center(K):
    """``Q K Q`` with ``Q = I - 11^T/n``."""
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeError("center expects a square matrix")
    return K - K.mean(axis=0, keepdims=True) - K.mean(axis=1, keepdims=True) + K.mean()


def _ridge_solve(G, ridge, label):
    """``(G + ridge I)^-1 G`` via Cholesky; G must be symmetric PSD."""
    n = G.shape[0]
    A = G + ridge * np.eye(n)
    try:
        cf = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{label}: ridge-regularized Gram matrix is not positive definite",
                             condition=np.inf) from exc
    diag = np.diag(cf[0]) ** 2
    cond = float(diag.max() / diag.min())
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalError(f"{label}: ridge-regularized Gram matrix is near singular", cond)
    S = sla.cho_solve(cf, G, check_finite=False)
    return 0.5 * (S + S.T), cond


def _fix_signs(V):
    for k in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, k]) > 1e-12)
        if nz.size and V[nz[0], k] < 0:
            V[:, k] = -V[:, k]
    return V


@dataclass
class GsirResult:
    predictors: np.ndarray
    eigenvalues: np.ndarray
    coef: np.ndarray
    X_train: np.ndarray = field(repr=False)
    sigma_x: float = 1.0
    sigma_y: float = 1.0
    condition: float = 1.0
    _k_col_mean: np.ndarray = field(default=None, repr=False)
    _k_mean: float = 0.0

    def transform(self, X_new):
        """Predictors for new rows, centered with training kernel statistics."""
        X_new = _rows(X_new)
        if X_new.shape[1] != self.X_train.shape[1]:
            raise ShapeError(f"expected {self.X_train.shape[1]} columns, got {X_new.shape[1]}")
        Kn = gram(X_new, self.sigma_x, Z=self.X_train)
        Kc = Kn - Kn.mean(axis=1, keepdims=True) - self._k_col_mean + self._k_mean
        return Kc @ self.coef


def gsir_fit(X, y, cfg: GsirConfig | None = None) -> GsirResult:
    cfg = cfg or GsirConfig()
    X, Y = _rows(X), _rows(y)
    n = X.shape[0]
    if Y.shape[0] != n:
        raise ShapeError("X and y disagree on n")
    if n < cfg.d + 1:
        raise ParameterError(f"need n >= d + 1 = {cfg.d + 1} rows")
    sx = _resolve(cfg.sigma_x, X)
    sy = _resolve(cfg.sigma_y, Y)
    Kx = gram(X, sx)
    Gx = center(Kx)
    Gy = center(gram(Y, sy))
    S, cond = _ridge_solve(Gx, cfg.eps_x * n, "predictor kernel")
    Ry, _ = _ridge_solve(Gy, cfg.eps_y * n, "response kernel")
    M = S @ Ry @ S
    M = 0.5 * (M + M.T)
    try:
        vals, vecs = sla.eigh(M, subset_by_index=[n - cfg.d, n - 1], check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError("eigen-decomposition failed", cond) from exc
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], _fix_signs(vecs[:, order].copy())
    pred = Gx @ vecs
    return GsirResult(pred, vals, vecs, X.copy(), sx, sy, cond,
                      Kx.mean(axis=0, keepdims=True), float(Kx.mean()))
