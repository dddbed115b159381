"""Command-line front end: ``benn {simulate,tune,train,predict,evaluate,benchmark}``.

Machine-readable output (JSON lines, CSV) goes to stdout or ``--out``; log
messages go to stderr. A JSON ``--config`` file supplies defaults for any
flag; explicit flags win.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .belt import BeltMode, extract_linear_basis
from .benchmark import CSV_FIELDS, BenchSettings, MODEL_D_TRAIN, Method, run_benchmark
from .checkpoint import load_checkpoint, save_checkpoint
from .datagen import gen_linear, gen_model_d, load_csv, save_csv
from .ensemble import (build_categorical_ensemble, build_cdf_ensemble, build_fourier_ensemble,
                       build_gauss_ensemble, build_moment_ensemble, identity_ensemble)
from .errors import BennError
from .metrics import distance_correlation, ensemble_mse, projection_distance
from .network import StructuralParams
from .trainer import TrainConfig, fit, predict_ensemble, predict_sufficient
from .tuning import suggest_architecture

log = logging.getLogger("benn")


def _emit(record, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(record, sort_keys=True) + "\n")
    stream.flush()


def _widths(text):
    if text is None:
        return None
    if isinstance(text, (int, list)):
        return text
    parts = [int(v) for v in str(text).split(",") if v.strip()]
    return parts[0] if len(parts) == 1 else parts


def _truncation(text):
    if text is None or str(text).lower() == "auto":
        return "auto"
    if str(text).lower() == "none":
        return None
    return float(text)


# --- subcommands ---------------------------------------------------------

def cmd_simulate(args):
    if args.model == "d-iv":
        data = gen_model_d(args.n, args.p, seed=args.seed)
    else:
        data = gen_linear(args.n, args.p, args.d, args.noise_sd, seed=args.seed)
        if args.basis_out:
            np.savetxt(args.basis_out, data.truth_basis, delimiter=",", fmt="%.17g")
    out = args.out or "/dev/stdout"
    save_csv(data, out)
    log.info("wrote %d rows to %s", data.n, out)
    return 0


def cmd_tune(args):
    params, drivers = suggest_architecture(args.n, args.p, args.d, beta=args.beta)
    _emit({"tune": drivers, "params": params.as_dict()})
    return 0


def _build_ensemble(args, y, m):
    fam = args.ensemble
    if fam == "identity":
        return identity_ensemble(y)
    if fam == "gauss":
        return build_gauss_ensemble(y, m, seed=args.ensemble_seed)
    if fam == "moments":
        return build_moment_ensemble(y, m)
    if fam == "cdf":
        return build_cdf_ensemble(y, m)
    if fam == "fourier":
        return build_fourier_ensemble(m, tau=args.tau)
    if fam == "categorical":
        return build_categorical_ensemble(y)
    raise BennError(f"unknown ensemble {fam!r}")


def cmd_train(args):
    data = load_csv(args.data)
    mode = BeltMode.parse(args.mode)
    if args.ensemble is None:
        args.ensemble = {"linear-cms": "identity", "nonlinear-cms": "identity",
                         "kth-moment": "moments", "categorical": "categorical"}.get(mode.tag, "gauss")
    if args.auto_tune:
        params, drivers = suggest_architecture(data.n, data.p, args.d, beta=args.beta)
        if mode.is_linear:
            params = replace(params, l1=0, k1=())
        if args.ensemble in ("identity", "categorical"):
            raise BennError("--auto-tune sizes m for a grid/kernel ensemble; "
                            f"not applicable to {args.ensemble}")
        m = params.m
        _emit({"auto_tune": {k: drivers[k] for k in ("m", "l1", "r1", "l2", "r2")}})
    else:
        m = args.m
        if args.ensemble == "identity":
            m = 1
        elif args.ensemble == "categorical":
            m = int(np.unique(data.y).size)
        elif mode.tag == "kth-moment":
            m = mode.k
        if m is None:
            raise BennError(f"--m is required for the {args.ensemble} ensemble")
        l1 = 0 if mode.is_linear else args.l1
        params = StructuralParams(p=data.p, l1=l1, k1=_widths(args.r1) if l1 else (), d=args.d,
                                  l2=args.l2, k2=_widths(args.r2) if args.l2 else (), m=m,
                                  b_w=args.b_w)
    spec = _build_ensemble(args, data.y, m)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr,
                      optimizer=args.optimizer, seed=args.seed,
                      truncation=_truncation(args.truncation), weight_clip=args.weight_clip,
                      workers=args.workers)
    _emit({"config": {"data": args.data, "mode": str(mode), "params": params.as_dict(),
                      "ensemble": {"family": spec.family, "m": spec.m},
                      "train": cfg.as_dict()}})
    result = fit(data.X, data.y, mode, params, spec, cfg, verbose=args.verbose)
    save_checkpoint(result, args.out)
    _emit({"checkpoint": args.out, "final_loss": result.loss_trace[-1],
           "epochs": len(result.loss_trace)})
    return 0


def cmd_predict(args):
    result = load_checkpoint(args.checkpoint)
    data = load_csv(args.data)
    z = predict_sufficient(result, data.X)
    cols = [f"z{j + 1}" for j in range(z.shape[1])]
    table = z
    if args.ensemble_out:
        g = predict_ensemble(result, data.X)
        cols += [f"g{j + 1}" for j in range(g.shape[1])]
        table = np.hstack([z, g])
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(cols)
        for row in table:
            writer.writerow([repr(float(v)) for v in row])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_evaluate(args):
    result = load_checkpoint(args.checkpoint)
    data = load_csv(args.data)
    reports = []
    z = predict_sufficient(result, data.X)
    truth = data.truth
    if args.truth_cols:
        # reload the raw table to pick arbitrary named columns
        truth = _named_columns(args.data, args.truth_cols.split(","))
    if truth is not None:
        dc = distance_correlation(z, truth, with_flag=True)
        rec = {"metric": "dcor", "value": dc.value, "n": data.n}
        if dc.degenerate:
            rec["degenerate"] = True
        reports.append(rec)
    reports.append({"metric": "ensemble_mse", "value": ensemble_mse(result, data.X, data.y),
                    "n": data.n})
    if args.truth_basis:
        B = np.loadtxt(args.truth_basis, delimiter=",", ndmin=2)
        if B.shape[0] != data.p and B.shape[1] == data.p:
            B = B.T
        reports.append({"metric": "projection_distance",
                        "value": projection_distance(extract_linear_basis(result.model), B),
                        "n": data.n})
    for rec in reports:
        _emit(rec)
    return 0


def _named_columns(path, names):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header = [h.strip() for h in rows[0]]
    missing = [c for c in names if c not in header]
    if missing:
        raise BennError(f"truth columns not found in {path}: {missing}")
    idx = [header.index(c) for c in names]
    return np.array([[float(r[i]) for i in idx] for r in rows[1:] if r], dtype=np.float64)


def cmd_benchmark(args):
    train = replace(MODEL_D_TRAIN, epochs=args.epochs, batch_size=args.batch_size,
                    learning_rate=args.lr, optimizer=args.optimizer)
    settings = BenchSettings(model=args.model, p=args.p, d=args.d, n_test=args.n_test,
                             l1=args.l1, r1=args.r1, l2=args.l2, r2=args.r2, train=train,
                             scale_lr=not args.no_lr_scaling)
    n_grid = [int(v) for v in args.n_grid.split(",")]
    methods = [Method.parse(v) for v in args.methods.split(",")]

    def progress(rec):
        log.info("replicate %s", json.dumps(rec, sort_keys=True))

    rows, records, seeds = run_benchmark(n_grid, args.replicates, methods, args.master_seed,
                                         settings, progress)
    header = {"model": args.model, "n_grid": n_grid, "replicates": args.replicates,
              "methods": [m.name for m in methods], "master_seed": args.master_seed,
              "seed_expansion": "splitmix64", "seeds": seeds, "p": args.p, "d": args.d,
              "n_test": args.n_test, "structure": [args.p, args.l1, args.r1, args.d,
                                                   args.l2, args.r2],
              "train": train.as_dict(), "lr_scaling": not args.no_lr_scaling}
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        out.write("#config: " + json.dumps(header, sort_keys=True) + "\n")
        writer = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    finally:
        if args.out:
            out.close()
    if args.records:
        with open(args.records, "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return 0


# --- parser --------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="benn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file of flag defaults")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic data set as CSV")
    p.add_argument("--model", choices=("d-iv", "linear"), default="d-iv")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, default=50)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--noise-sd", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--basis-out", help="linear model: write the true basis here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tune", help="rate-optimal architecture for a sample size")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--beta", type=float, default=0.0)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="fit a BENN and write a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", default="nonlinear-cs")
    p.add_argument("--l1", type=int, default=2)
    p.add_argument("--r1", default="50", help="width or comma list of widths")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--l2", type=int, default=1)
    p.add_argument("--r2", default="2000")
    p.add_argument("--m", type=int)
    p.add_argument("--b-w", type=float)
    p.add_argument("--auto-tune", action="store_true")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--ensemble", choices=("gauss", "identity", "moments", "cdf", "fourier",
                                          "categorical"))
    p.add_argument("--ensemble-seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truncation", default="auto", help="auto, none or a positive bound")
    p.add_argument("--weight-clip", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="sufficient predictors for a CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--ensemble-out", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="metric report for a checkpoint on a CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--truth-cols", help="comma list of truth columns (default f1..fk)")
    p.add_argument("--truth-basis", help="CSV with the true p x d basis")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="BENN vs GSIR replicate study")
    p.add_argument("--model", choices=("d-iv", "linear"), default="d-iv")
    p.add_argument("--n-grid", default="1000,2000")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--methods", default="benn,gsir")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--p", type=int, default=50)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--l1", type=int, default=2)
    p.add_argument("--r1", type=int, default=50)
    p.add_argument("--l2", type=int, default=1)
    p.add_argument("--r2", type=int, default=2000)
    p.add_argument("--epochs", type=int, default=MODEL_D_TRAIN.epochs)
    p.add_argument("--batch-size", type=int, default=MODEL_D_TRAIN.batch_size)
    p.add_argument("--lr", type=float, default=MODEL_D_TRAIN.learning_rate,
                   help="base rate; SGD multiplies it by max(1, m/2) unless --no-lr-scaling")
    p.add_argument("--no-lr-scaling", action="store_true")
    p.add_argument("--optimizer", choices=("adam", "sgd"), default=MODEL_D_TRAIN.optimizer)
    p.add_argument("--out")
    p.add_argument("--records", help="write per-replicate JSON lines here")
    p.set_defaults(func=cmd_benchmark)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    with open(known.config) as fh:
        overlay = {k.replace("-", "_"): v for k, v in json.load(fh).items()}
    # overlay values become defaults, so explicit flags still win
    for action in parser._subparsers._group_actions:
        command = next((a for a in rest if a in action.choices), None)
        sub = action.choices.get(command)
        if sub is None:
            continue
        sub.set_defaults(**overlay)
        for opt in sub._actions:
            if opt.dest in overlay:
                opt.required = False
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"benn: error: cannot read config: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"benn: error: {exc}", file=sys.stderr)
        return 1
    except BennError as exc:
        print(f"benn: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
