"""Truncated least-squares training of a BENN.

The objective on a data set of n rows is

    L = tau / (n m) * sum_{i,j} (G[i, j] - T_B(h_j(f(x_i))))**2

with ``T_B`` the componentwise clamp to ``[-B, B]`` (omitted when no bound is
configured). Gradients are computed by hand-written reverse-mode passes over
the stacked f/h layers; ReLU and the clamp use subgradient 0 at their kinks.
"""
from __future__ import annotations

import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .belt import BeltMode, build_benn, check_ensemble
from .ensemble import EnsembleSpec, ensemble_matrix
from .errors import DivergenceError, ParameterError, ShapeError
from .network import BennModel, DenseNet, StructuralParams, forward_arrays

OPTIMIZERS = ("sgd", "adam")
_EVAL_CHUNK = 1024


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings.

    ``truncation`` is ``"auto"`` (clamp at the ensemble's ``b_y``), ``None``
    (no clamp) or an explicit positive bound. ``weight_clip=None`` falls back
    to the structural bound ``b_w``; if both are absent weights are free.
    """

    epochs: int = 150
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    truncation: float | str | None = "auto"
    weight_clip: float | None = None
    shuffle: bool = True
    init_scheme: str = "zeros-bias-uniform-weight"
    workers: int = 1

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ParameterError("epochs must be >= 1")
        if int(self.batch_size) < 1:
            raise ParameterError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ParameterError("learning_rate must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise ParameterError(f"optimizer must be one of {OPTIMIZERS}")
        if self.truncation not in ("auto", None) and not float(self.truncation) > 0:
            raise ParameterError("truncation bound must be positive")
        if self.weight_clip is not None and not self.weight_clip > 0:
            raise ParameterError("weight_clip must be positive")
        if int(self.workers) < 1:
            raise ParameterError("workers must be >= 1")

    def resolve_truncation(self, spec: EnsembleSpec):
        if self.truncation == "auto":
            return float(spec.b_y)
        return None if self.truncation is None else float(self.truncation)

    def as_dict(self):
        return asdict(self)


@dataclass
class BennGradient:
    """Gradients aligned with ``net.params()`` of each sub-network."""

    f: list
    h: list
    loss: float = 0.0

    def flat(self):
        return np.concatenate([g.ravel() for g in (*self.f, *self.h)])


@dataclass
class FitResult:
    model: BennModel
    loss_trace: list
    config: TrainConfig
    ensemble: EnsembleSpec
    truncation: float | None = None
    seconds: float = 0.0
    extras: dict = field(default_factory=dict)

    def transform(self, X_new):
        return predict_sufficient(self, X_new)


# --- core passes ---------------------------------------------------------

def _layers(f_net: DenseNet, h_net: DenseNet):
    """Stacked (W, b, relu_after) triples for h o f."""
    out = []
    for net in (f_net, h_net):
        last = len(net.weights) - 1
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            relu = i < last and net.activation == "relu-on-hidden"
            out.append((w, b, relu))
    return out


def _check_xg(model, X, G):
    X = np.asarray(X, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if G.ndim == 1:
        G = G.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != model.f_net.in_dim:
        raise ShapeError(f"X must be (n, {model.f_net.in_dim}), got {X.shape}")
    if G.shape != (X.shape[0], model.h_net.out_dim):
        raise ShapeError(f"G must be ({X.shape[0]}, {model.h_net.out_dim}), got {G.shape}")
    return X, G


def _predict_raw(model, X):
    parts = []
    for start in range(0, X.shape[0], _EVAL_CHUNK):
        xb = X[start:start + _EVAL_CHUNK]
        z = forward_arrays(model.f_net.weights, model.f_net.biases, xb, model.f_net.activation)
        parts.append(forward_arrays(model.h_net.weights, model.h_net.biases, z,
                                    model.h_net.activation))
    if not parts:
        return np.zeros((0, model.h_net.out_dim))
    return np.vstack(parts)


def empirical_loss(model: BennModel, X, G, trunc=None, tau=1.0):
    """``tau / (n m) * sum (G - T_trunc(h(f(X))))**2``."""
    if trunc is not None and not trunc > 0:
        raise ParameterError("truncation bound must be positive")
    X, G = _check_xg(model, X, G)
    pred = _predict_raw(model, X)
    if trunc is not None:
        pred = np.clip(pred, -trunc, trunc)
    n, m = G.shape
    return float(tau * np.sum((G - pred) ** 2) / (n * m))


def _loss_grad(layers, X, G, trunc, scale):
    """Loss contribution ``scale * SSE`` of the rows in X and its gradients."""
    acts = [X]
    pres = []
    a = X
    for w, b, relu in layers:
        pre = a @ w.T + b
        pres.append(pre)
        a = np.maximum(pre, 0.0) if relu else pre
        acts.append(a)
    out = acts[-1]
    if trunc is not None:
        resid = G - np.clip(out, -trunc, trunc)
        delta = -2.0 * scale * resid * (np.abs(out) <= trunc)
    else:
        resid = G - out
        delta = -2.0 * scale * resid
    loss = scale * float(np.sum(resid * resid))
    grads = [None] * (2 * len(layers))
    for i in range(len(layers) - 1, -1, -1):
        w = layers[i][0]
        grads[2 * i] = delta.T @ acts[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ w
            if layers[i - 1][2]:
                delta = delta * (pres[i - 1] > 0)
    return loss, grads


def _split(model, grads):
    nf = 2 * len(model.f_net.weights)
    return grads[:nf], grads[nf:]


def gradient(model: BennModel, batch_X, batch_G, trunc=None, tau=1.0, workers=1,
             _pool=None) -> BennGradient:
    """Gradient of :func:`empirical_loss` on a batch w.r.t. every weight and bias.

    With ``workers > 1`` the rows are split into that many contiguous
    partitions whose partial gradients are summed in partition order.
    """
    X, G = _check_xg(model, batch_X, batch_G)
    n, m = G.shape
    if n == 0:
        raise ShapeError("empty batch")
    layers = _layers(model.f_net, model.h_net)
    scale = tau / (n * m)
    if workers <= 1 or n < 2:
        loss, grads = _loss_grad(layers, X, G, trunc, scale)
    else:
        bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
        chunks = [(X[a:b], G[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
        job = lambda c: _loss_grad(layers, c[0], c[1], trunc, scale)  # noqa: E731
        if _pool is not None:
            results = list(_pool.map(job, chunks))
        else:
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                results = list(pool.map(job, chunks))
        loss = 0.0
        grads = [np.zeros_like(g) for g in results[0][1]]
        for part_loss, part in results:
            loss += part_loss
            for acc, g in zip(grads, part):
                acc += g
    gf, gh = _split(model, grads)
    return BennGradient(gf, gh, loss)


class _Adam:
    def __init__(self, params, lr, beta1, beta2, eps):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def _rebuild(model, params):
    nf = 2 * len(model.f_net.weights)
    return BennModel(model.f_net.replace_params(params[:nf]),
                     model.h_net.replace_params(params[nf:]), model.mode, model.params)


def fit(X, y, mode: BeltMode | str, params: StructuralParams, spec: EnsembleSpec,
        cfg: TrainConfig | None = None, verbose=False, stream=None, G=None,
        callback=None) -> FitResult:
    """Train a BENN on ``(X, y)`` against the ensemble ``spec``.

    Runs ``epochs * ceil(n / batch_size)`` optimizer steps; after every epoch
    the full-training-set loss is appended to ``loss_trace``. A precomputed
    target matrix may be passed as ``G``. ``callback(epoch, model, loss)`` is
    invoked after every epoch.
    """
    cfg = cfg or TrainConfig()
    if isinstance(mode, str):
        mode = BeltMode.parse(mode)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.p:
        raise ShapeError(f"X must be (n, {params.p}), got {X.shape}")
    n = X.shape[0]
    if n < 1:
        raise ShapeError("no training rows")
    if G is None:
        G = ensemble_matrix(spec, y)
    G = np.asarray(G, dtype=np.float64).reshape(n, -1)
    check_ensemble(mode, spec, params)
    batch_size = min(int(cfg.batch_size), n)
    trunc = cfg.resolve_truncation(spec)
    clip = cfg.weight_clip if cfg.weight_clip is not None else params.b_w
    init_seed, shuffle_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    model = build_benn(mode, params, seed=init_seed, scheme=cfg.init_scheme)
    if clip is not None:
        model = _rebuild(model, [np.clip(p, -clip, clip) for p in
                                 (*model.f_net.params(), *model.h_net.params())])
    work = [np.array(p) for p in (*model.f_net.params(), *model.h_net.params())]
    if cfg.optimizer == "adam":
        opt = _Adam(work, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    else:
        opt = _SGD(cfg.learning_rate)
    rng = np.random.default_rng(shuffle_seed)
    stream = stream or sys.stdout
    nf = 2 * len(model.f_net.weights)
    f_act, h_act = model.f_net.activation, model.h_net.activation
    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    m = G.shape[1]
    trace = []
    t0 = time.perf_counter()
    try:
        for epoch in range(1, int(cfg.epochs) + 1):
            order = rng.permutation(n) if cfg.shuffle else np.arange(n)
            for start in range(0, n, batch_size):
                idx = order[start:start + batch_size]
                layers = _stack(work, nf, f_act, h_act)
                scale = spec.tau / (idx.size * m)
                if pool is None:
                    _, grads = _loss_grad(layers, X[idx], G[idx], trunc, scale)
                else:
                    tmp = _rebuild(model, work)
                    g = gradient(tmp, X[idx], G[idx], trunc, spec.tau, cfg.workers, pool)
                    grads = [*g.f, *g.h]
                opt.step(work, grads)
                if clip is not None:
                    for p in work:
                        np.clip(p, -clip, clip, out=p)
            current = _rebuild(model, work)
            loss = empirical_loss(current, X, G, trunc, spec.tau)
            if not math.isfinite(loss):
                raise DivergenceError(epoch, loss)
            trace.append(loss)
            if callback is not None:
                callback(epoch, current, loss)
            if verbose:
                stream.write(json.dumps({"epoch": epoch, "loss": loss}) + "\n")
                stream.flush()
    finally:
        if pool is not None:
            pool.shutdown()
    return FitResult(_rebuild(model, work), trace, cfg, spec, trunc,
                     seconds=time.perf_counter() - t0)


def _stack(work, nf, f_act, h_act):
    out = []
    for part, act in ((work[:nf], f_act), (work[nf:], h_act)):
        k = len(part) // 2
        for i in range(k):
            out.append((part[2 * i], part[2 * i + 1], i < k - 1 and act == "relu-on-hidden"))
    return out


def predict_sufficient(result: FitResult, X_new):
    """Estimated sufficient predictors ``f(x)`` for each row of ``X_new``."""
    model = result.model if isinstance(result, FitResult) else result
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim != 2 or X_new.shape[1] != model.f_net.in_dim:
        raise ShapeError(f"X_new must have {model.f_net.in_dim} columns, got shape {X_new.shape}")
    f = model.f_net
    return forward_arrays(f.weights, f.biases, X_new, f.activation)


def predict_ensemble(result: FitResult, X_new):
    """Fitted ensemble values, clamped at the training truncation bound if any."""
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim != 2 or X_new.shape[1] != result.model.f_net.in_dim:
        raise ShapeError(f"X_new must have {result.model.f_net.in_dim} columns")
    pred = _predict_raw(result.model, X_new)
    if result.truncation is not None:
        pred = np.clip(pred, -result.truncation, result.truncation)
    return pred


def step_function(pred, t, tau=1.0):
    """Piecewise-constant reconstruction: column j on ``[t_j, t_{j+1})``."""
    pred = np.asarray(pred, dtype=np.float64)
    m = pred.shape[1]
    if not 0 <= t < tau:
        raise ParameterError(f"t must lie in [0, tau), got {t}")
    j = min(int(math.floor(t * m / tau)), m - 1)
    return pred[:, j]
