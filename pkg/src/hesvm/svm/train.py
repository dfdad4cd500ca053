"""Pegasos-style trainers: primal (linear) and kernelized (polynomial dual).

Both fit one binary classifier per class (one-vs-rest) by stochastic
subgradient descent on the regularized hinge loss with step ``1/(lam*t)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateData
from .model import Kernel, SvmModel


@dataclass(frozen=True)
class TrainConfig:
    """Trainer settings.

    Attributes:
        lam: Regularization strength.
        epochs: Passes over the data (one random permutation each).
        seed: Seed for the permutations.
        schedule: Step-size rule; only ``"pegasos"`` (``1/(lam*t)``) exists.
    """

    lam: float = 1e-2
    epochs: int = 200
    seed: int = 0
    schedule: str = "pegasos"

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.schedule != "pegasos":
            raise ValueError(f"unknown schedule {self.schedule!r}")


def _check_data(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("X must be M x F with one label per row")
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateData("training data contains a single class")
    if np.any(np.std(x, axis=0) == 0):
        raise DegenerateData("a feature has zero variance")
    return classes


def hinge_objective(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, lam: float) -> float:
    """``lam/2 (|w|^2 + b^2) + mean(max(0, 1 - y (w.x + b)))``."""
    margins = y * (x @ w + b)
    return 0.5 * lam * (float(w @ w) + b * b) + float(np.maximum(0.0, 1.0 - margins).mean())


def pegasos_binary(x: np.ndarray, y: np.ndarray, cfg: TrainConfig, rng: np.random.Generator,
                   trace: list | None = None) -> tuple[np.ndarray, float]:
    """Averaged-iterate Pegasos for labels in {-1, +1}.

    The bias is regularized like a weight on a constant feature (as in the
    kernel trainer's ``K + 1``). Leaving it free lets the early ``1/(lam*t)``
    steps inflate it, which costs accuracy and blows up the score range.

    If ``trace`` is given, the averaged iterate's objective is appended after each epoch.
    """
    m, f = x.shape
    w = np.zeros(f)
    b = 0.0
    w_avg = np.zeros(f)
    b_avg = 0.0
    t = 0
    for _ in range(cfg.epochs):
        for i in rng.permutation(m):
            t += 1
            eta = 1.0 / (cfg.lam * t)
            xi, yi = x[i], y[i]
            violated = yi * (xi @ w + b) < 1.0
            w *= 1.0 - eta * cfg.lam
            b *= 1.0 - eta * cfg.lam
            if violated:
                w += eta * yi * xi
                b += eta * yi
            w_avg += (w - w_avg) / t
            b_avg += (b - b_avg) / t
        if trace is not None:
            trace.append(hinge_objective(w_avg, b_avg, x, y, cfg.lam))
    return w_avg.copy(), float(b_avg)


def _ovr_targets(y: np.ndarray, classes: np.ndarray) -> list[np.ndarray]:
    if classes.size == 2:
        return [np.where(y == classes[1], 1.0, -1.0)]
    return [np.where(y == c, 1.0, -1.0) for c in classes]


def train_linear_ovr(x, y, cfg: TrainConfig = TrainConfig()) -> SvmModel:
    """One-vs-rest linear SVM (a single classifier for two classes).

    Raises:
        DegenerateData: one class only, or a constant feature.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    classes = _check_data(x, y)
    rng = np.random.default_rng(cfg.seed)
    ws, bs = [], []
    for target in _ovr_targets(y, classes):
        w, b = pegasos_binary(x, target, cfg, rng)
        ws.append(w)
        bs.append(b)
    labels = tuple(int(c) for c in classes)
    return SvmModel(Kernel.LINEAR, np.array(bs), labels, weights=np.array(ws))


def poly_kernel(a: np.ndarray, b: np.ndarray, degree: int, gamma: float, coef0: float) -> np.ndarray:
    return (gamma * a @ b.T + coef0) ** degree


def train_poly_dual_ovr(x, y, cfg: TrainConfig = TrainConfig(), degree: int = 3, gamma: float = 2.0,
                        coef0: float = 0.0) -> SvmModel:
    """Kernelized Pegasos with a polynomial kernel, one-vs-rest.

    The bias enters through the augmented kernel ``K + 1``, so it is
    ``sum_s a_s`` for the final dual coefficients ``a_s = y_s * count_s / (lam*T)``.
    Support vectors are the training rows with a non-zero coefficient for
    any class.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    classes = _check_data(x, y)
    rng = np.random.default_rng(cfg.seed)
    m = x.shape[0]
    gram = poly_kernel(x, x, degree, gamma, coef0) + 1.0
    coefs = []
    for target in _ovr_targets(y, classes):
        counts = np.zeros(m)
        t = 0
        for _ in range(cfg.epochs):
            for i in rng.permutation(m):
                t += 1
                score = (counts * target) @ gram[i] / (cfg.lam * t)
                if target[i] * score < 1.0:
                    counts[i] += 1.0
        coefs.append(counts * target / (cfg.lam * t))
    dual = np.array(coefs)
    keep = np.flatnonzero(np.any(dual != 0.0, axis=0))
    dual = dual[:, keep]
    labels = tuple(int(c) for c in classes)
    return SvmModel(Kernel.POLY_DUAL, dual.sum(axis=1), labels, degree=degree, gamma=gamma, coef0=coef0,
                    support_vectors=x[keep], dual_coefs=dual)
