"""JSON checkpoint format (``"version": "benn-v1"``).

Weights are stored row-major with their shapes; floats go through ``repr``
so a save/load round trip is exact. No timing or host information is
written, so identical training runs produce identical files.
"""
from __future__ import annotations

import json

import numpy as np

from .belt import BeltMode
from .ensemble import EnsembleSpec
from .errors import ParseError
from .network import BennModel, DenseNet, StructuralParams
from .trainer import FitResult, TrainConfig

VERSION = "benn-v1"


def _net_to_dict(net: DenseNet):
    return {
        "activation": net.activation,
        "layers": [
            {"shape": list(w.shape), "weight": w.ravel(order="C").tolist(), "bias": b.tolist()}
            for w, b in zip(net.weights, net.biases)
        ],
    }


def _net_from_dict(data):
    ws, bs = [], []
    for layer in data["layers"]:
        rows, cols = layer["shape"]
        ws.append(np.array(layer["weight"], dtype=np.float64).reshape(rows, cols))
        bs.append(np.array(layer["bias"], dtype=np.float64))
    return DenseNet(tuple(ws), tuple(bs), data["activation"])


def to_dict(result: FitResult):
    model = result.model
    mode = model.mode
    return {
        "version": VERSION,
        "params": model.params.as_dict(),
        "mode": {"tag": mode.tag, "k": mode.k},
        "ensemble": result.ensemble.as_dict(),
        "f_net": _net_to_dict(model.f_net),
        "h_net": _net_to_dict(model.h_net),
        "train": {
            "config": result.config.as_dict() if result.config else None,
            "truncation": result.truncation,
            "loss_trace": list(result.loss_trace),
        },
    }


def from_dict(data) -> FitResult:
    if data.get("version") != VERSION:
        raise ParseError(f"unsupported checkpoint version {data.get('version')!r}")
    params = StructuralParams.from_dict(data["params"])
    mode = BeltMode(data["mode"]["tag"], data["mode"].get("k"))
    model = BennModel(_net_from_dict(data["f_net"]), _net_from_dict(data["h_net"]), mode, params)
    train = data.get("train") or {}
    cfg = TrainConfig(**train["config"]) if train.get("config") else None
    return FitResult(model, list(train.get("loss_trace", [])), cfg,
                     EnsembleSpec.from_dict(data["ensemble"]), train.get("truncation"))


def dumps(result: FitResult) -> str:
    return json.dumps(to_dict(result), sort_keys=True)


def save_checkpoint(result: FitResult, path):
    with open(path, "w") as fh:
        fh.write(dumps(result))
        fh.write("\n")


def load_checkpoint(path) -> FitResult:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not a JSON checkpoint ({exc})") from exc
    return from_dict(data)
