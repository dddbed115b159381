"""Belted and ensembled neural networks for sufficient dimension reduction.

The estimator composes a dimension-reducing network ``f: R^p -> R^d`` (ending
in a narrow "belt") with an ensemble-regression network ``h: R^d -> R^m``
and fits ``h o f`` by least squares to a family of m transformations of the
response. ``f(X)`` is the estimated sufficient predictor.
"""

__version__ = "0.1.0"

from .belt import BeltMode, build_benn, extract_linear_basis
from .ensemble import (EnsembleSpec, apply_ensemble, build_gauss_ensemble, ensemble_matrix,
                       make_grid)
from .network import (BennModel, DenseNet, StructuralParams, benn_forward, clip_weights,
                      forward, init_network, truncate)
from .trainer import (FitResult, TrainConfig, empirical_loss, fit, gradient, predict_ensemble,
                      predict_sufficient)

__all__ = [
    "BeltMode", "BennModel", "DenseNet", "EnsembleSpec", "FitResult", "StructuralParams",
    "TrainConfig", "apply_ensemble", "benn_forward", "build_benn", "build_gauss_ensemble",
    "clip_weights", "empirical_loss", "ensemble_matrix", "extract_linear_basis", "fit",
    "forward", "gradient", "init_network", "make_grid", "predict_ensemble",
    "predict_sufficient", "truncate",
]
