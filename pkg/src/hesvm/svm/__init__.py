"""Plaintext SVM: training, decision functions, classification and persistence."""

from .io import load_model, save_model
from .model import Kernel, SvmModel, classify, decision, decision_linear, decision_poly, predict
from .train import TrainConfig, hinge_objective, pegasos_binary, train_linear_ovr, train_poly_dual_ovr

__all__ = [
    "Kernel",
    "SvmModel",
    "TrainConfig",
    "classify",
    "decision",
    "decision_linear",
    "decision_poly",
    "hinge_objective",
    "load_model",
    "pegasos_binary",
    "predict",
    "save_model",
    "train_linear_ovr",
    "train_poly_dual_ovr",
]
