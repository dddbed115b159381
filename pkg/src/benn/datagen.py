"""Synthetic benchmark data, CSV ingestion, splitting and standardization.

Random draws use numpy's PCG64 bit generator (``numpy.random.default_rng``)
with its ziggurat normal sampler; the name is recorded in ``Dataset.meta``.
"""
from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError, ParseError, ShapeError

RNG_NAME = "numpy.PCG64+ziggurat"
MODEL_D_MEAN = 0.2
MODEL_D_VAR = 0.5


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    truth: np.ndarray | None = None
    truth_basis: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ShapeError(f"X {self.X.shape} and y {self.y.shape} disagree on n")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=np.float64)
            if self.truth.ndim == 1:
                self.truth = self.truth.reshape(-1, 1)
            if self.truth.shape[0] != self.n:
                raise ShapeError("truth has the wrong number of rows")
        if self.truth_basis is not None:
            self.truth_basis = np.asarray(self.truth_basis, dtype=np.float64)
        for name in ("X", "y", "truth"):
            arr = getattr(self, name)
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ParameterError(f"non-finite values in {name}")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx],
                       None if self.truth is None else self.truth[idx],
                       self.truth_basis, dict(self.meta))


def true_predictors_d(X):
    """``[sin((x1+x2) pi/10) + x1^2, 2 sin^2((x3+x4) pi/10) + x3^2]`` per row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 4:
        raise ShapeError("Model D needs at least 4 predictors")
    x1, x2, x3, x4 = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
    f1 = np.sin((x1 + x2) * np.pi / 10) + x1 ** 2
    f2 = 2 * np.sin((x3 + x4) * np.pi / 10) ** 2 + x3 ** 2
    return np.column_stack([f1, f2])


def gen_model_d(n, p=50, seed=0):
    """Heteroscedastic Model D with predictors i.i.d. N(0.2, variance 0.5).

    ``Y = f1(X) + f2(X) * eps`` with ``eps`` standard normal.
    """
    if p < 4:
        raise ParameterError(f"Model D needs p >= 4, got p={p}")
    if n < 1:
        raise ParameterError("n must be positive")
    rng = np.random.default_rng(seed)
    X = rng.normal(MODEL_D_MEAN, math.sqrt(MODEL_D_VAR), size=(n, p))
    eps = rng.standard_normal(n)
    truth = true_predictors_d(X)
    y = truth[:, 0] + truth[:, 1] * eps
    meta = {"generator": "d-iv", "n": n, "p": p, "seed": seed, "rng": RNG_NAME,
            "x_law": "N(mean=0.2, variance=0.5)"}
    return Dataset(X, y, truth, None, meta)


def random_orthonormal(p, d, rng):
    q, r = np.linalg.qr(rng.standard_normal((p, d)))
    return q * np.sign(np.diag(r))


def gen_linear(n, p, d, noise_sd=0.2, seed=0, basis=None):
    """Linear single/multi-index data ``Y = sum_k sin(B_k^T X) + noise_sd * eps``."""
    if not 1 <= d < p:
        raise ParameterError(f"need 1 <= d < p, got d={d}, p={p}")
    if noise_sd < 0:
        raise ParameterError("noise_sd must be non-negative")
    rng = np.random.default_rng(seed)
    B = random_orthonormal(p, d, rng)
    if basis is not None:
        B = np.asarray(basis, dtype=np.float64).reshape(p, d)
    X = rng.standard_normal((n, p))
    eps = rng.standard_normal(n)
    Z = X @ B
    y = np.sin(Z).sum(axis=1) + noise_sd * eps
    meta = {"generator": "linear", "n": n, "p": p, "d": d, "noise_sd": noise_sd,
            "seed": seed, "rng": RNG_NAME}
    return Dataset(X, y, Z, B, meta)


# --- CSV -----------------------------------------------------------------

def save_csv(dataset: Dataset, path):
    """Write ``x1..xp, y[, f1..fk]`` with a leading ``#meta:`` comment line.

    Floats are written with ``repr`` so reloading is exact.
    """
    cols = [f"x{j + 1}" for j in range(dataset.p)] + ["y"]
    k = 0 if dataset.truth is None else dataset.truth.shape[1]
    cols += [f"f{j + 1}" for j in range(k)]
    with open(path, "w", newline="") as fh:
        fh.write("#meta: " + json.dumps(dataset.meta, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for i in range(dataset.n):
            row = list(dataset.X[i]) + [dataset.y[i]]
            if k:
                row += list(dataset.truth[i])
            writer.writerow([repr(float(v)) for v in row])


def load_csv(path):
    """Read a dataset written by :func:`save_csv` or any file with that header."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"data file not found: {path}")
    meta = {}
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            if line.startswith("#meta:"):
                try:
                    meta = json.loads(line[len("#meta:"):])
                except json.JSONDecodeError as exc:
                    raise ParseError(f"bad #meta line in {path}: {exc}") from exc
            continue
        if line.strip():
            body.append(line)
    if not body:
        raise ParseError(f"{path} has no header row")
    reader = csv.reader(body)
    header = [h.strip() for h in next(reader)]
    if "y" not in header:
        raise ParseError(f"{path}: missing required column 'y'", column="y")
    xcols = _numbered(header, "x")
    fcols = _numbered(header, "f")
    if not xcols:
        raise ParseError(f"{path}: no predictor columns x1..xp")
    rows = []
    for r, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields, found {len(row)}", row=r)
        vals = []
        for c, cell in enumerate(row):
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell {cell!r}", row=r,
                                 column=header[c]) from None
        rows.append(vals)
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    pos = {h: i for i, h in enumerate(header)}
    X = data[:, [pos[h] for h in xcols]]
    y = data[:, pos["y"]]
    truth = data[:, [pos[h] for h in fcols]] if fcols else None
    return Dataset(X, y, truth, None, meta)


def _numbered(header, prefix):
    found = {}
    for h in header:
        if h.startswith(prefix) and h[len(prefix):].isdigit():
            found[int(h[len(prefix):])] = h
    if found and sorted(found) != list(range(1, len(found) + 1)):
        raise ParseError(f"columns {prefix}1..{prefix}k must be contiguous")
    return [found[k] for k in sorted(found)]


# --- splitting / scaling -------------------------------------------------

def split(dataset: Dataset, test_fraction=1 / 3, seed=0):
    """Seeded random split; the test part has ``floor(n * test_fraction)`` rows."""
    if not 0 < test_fraction < 1:
        raise ParameterError("test_fraction must lie in (0, 1)")
    if dataset.n < 2:
        raise ParameterError("need at least two rows to split")
    n_test = int(math.floor(dataset.n * test_fraction))
    perm = np.random.default_rng(seed).permutation(dataset.n)
    test_idx, train_idx = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    return dataset.subset(train_idx), dataset.subset(test_idx)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray
    constant: tuple = ()

    def apply(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


def standardize(train: Dataset, test: Dataset | None = None):
    """Center/scale X columns with training statistics.

    Constant training columns pass through untouched and are reported in
    ``Standardizer.constant``.
    """
    mean = train.X.mean(axis=0)
    sd = train.X.std(axis=0)
    constant = tuple(int(j) for j in np.flatnonzero(sd == 0))
    if constant:
        warnings.warn(f"constant predictor columns left unscaled: {list(constant)}",
                      RuntimeWarning, stacklevel=2)
    scale = np.where(sd == 0, 1.0, sd)
    mean = np.where(sd == 0, 0.0, mean)
    tf = Standardizer(mean, scale, constant)
    new_train = replace(train, X=tf.apply(train.X))
    new_test = None if test is None else replace(test, X=tf.apply(test.X))
    return new_train, new_test, tf
