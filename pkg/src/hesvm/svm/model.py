"""Plaintext SVM model, decision functions and the classification rule."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np


class Kernel(str, enum.Enum):
    LINEAR = "linear"
    POLY_PRIMAL = "poly_primal"
    POLY_DUAL = "poly_dual"

    @classmethod
    def parse(cls, value) -> Kernel:
        if isinstance(value, Kernel):
            return value
        return cls(str(value).replace("-", "_").lower())


@dataclass(frozen=True, eq=False)
class SvmModel:
    """One-vs-rest SVM with linear or polynomial decision functions.

    Attributes:
        kernel: Which decision function the model evaluates.
        weights: ``C x F`` primal weights (linear and ``poly_primal``).
        intercepts: ``C`` biases.
        degree: Polynomial degree ``d``.
        gamma: Kernel scale for ``poly_dual``.
        coef0: Kernel offset for ``poly_dual``.
        support_vectors: ``S x F`` (``poly_dual``).
        dual_coefs: ``C x S`` signed dual coefficients (``poly_dual``).
        class_labels: Label for each score; for a single score the pair
            ``(negative, positive)``.
    """

    kernel: Kernel
    intercepts: np.ndarray
    class_labels: tuple[int, ...]
    weights: np.ndarray | None = None
    degree: int = 3
    gamma: float = 2.0
    coef0: float = 0.0
    support_vectors: np.ndarray | None = None
    dual_coefs: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kernel", Kernel.parse(self.kernel))
        object.__setattr__(self, "intercepts", np.atleast_1d(np.asarray(self.intercepts, dtype=np.float64)))
        for name in ("weights", "support_vectors", "dual_coefs"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.atleast_2d(np.asarray(val, dtype=np.float64)))
        c = self.intercepts.shape[0]
        if self.kernel is Kernel.POLY_DUAL:
            if self.support_vectors is None or self.dual_coefs is None:
                raise ValueError("poly_dual needs support vectors and dual coefficients")
            if self.dual_coefs.shape != (c, self.support_vectors.shape[0]):
                raise ValueError(
                    f"dual coefficients {self.dual_coefs.shape} do not match {c} classes x "
                    f"{self.support_vectors.shape[0]} support vectors"
                )
        else:
            if self.weights is None:
                raise ValueError(f"{self.kernel.value} needs primal weights")
            if self.weights.shape[0] != c:
                raise ValueError(f"{self.weights.shape[0]} weight rows for {c} intercepts")
        if self.kernel is not Kernel.LINEAR:
            if self.degree < 1:
                raise ValueError("degree must be >= 1")
            if self.gamma <= 0:
                raise ValueError("gamma must be positive")
        expected = 2 if c == 1 else c
        if len(self.class_labels) != expected:
            raise ValueError(f"expected {expected} class labels, got {len(self.class_labels)}")

    @property
    def n_scores(self) -> int:
        return self.intercepts.shape[0]

    @property
    def feature_count(self) -> int:
        if self.kernel is Kernel.POLY_DUAL:
            return self.support_vectors.shape[1]
        return self.weights.shape[1]

    def with_kernel(self, kernel, **changes) -> SvmModel:
        return replace(self, kernel=Kernel.parse(kernel), **changes)


def _inputs(model: SvmModel, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.feature_count:
        raise ValueError(f"expected {model.feature_count} features, got {arr.shape[1]}")
    return arr, single


def decision_linear(model: SvmModel, x) -> np.ndarray:
    """``w_j . x + b_j`` for each class (rows of ``x`` if 2-D)."""
    if model.weights is None:
        raise ValueError("model has no primal weights")
    arr, single = _inputs(model, x)
    out = arr @ model.weights.T + model.intercepts
    return out[0] if single else out


def decision_poly(model: SvmModel, x) -> np.ndarray:
    """``(w_j . x + b_j)**d`` (primal) or ``sum_s a_js (gamma <x, sv_s> + coef0)**d + b_j`` (dual)."""
    arr, single = _inputs(model, x)
    if model.kernel is Kernel.POLY_DUAL:
        k = (model.gamma * arr @ model.support_vectors.T + model.coef0) ** model.degree
        out = k @ model.dual_coefs.T + model.intercepts
    elif model.kernel is Kernel.POLY_PRIMAL:
        out = (arr @ model.weights.T + model.intercepts) ** model.degree
    else:
        raise ValueError("decision_poly needs a polynomial kernel")
    return out[0] if single else out


def decision(model: SvmModel, x) -> np.ndarray:
    return decision_linear(model, x) if model.kernel is Kernel.LINEAR else decision_poly(model, x)


def classify(scores, labels=None):
    """Label for one score vector.

    One score: ``+1`` when ``f(x) >= 0`` else ``-1`` (or ``labels[1]`` /
    ``labels[0]``).  Several: label of the largest score, ties to the lowest
    index.
    """
    s = np.atleast_1d(np.asarray(scores, dtype=np.float64))
    if s.size == 1:
        positive = s[0] >= 0
        if labels is None:
            return 1 if positive else -1
        return labels[1] if positive else labels[0]
    idx = int(np.argmax(s))
    return idx if labels is None else labels[idx]


def predict(model: SvmModel, x) -> np.ndarray:
    scores = np.atleast_2d(decision(model, x))
    return np.array([classify(row, model.class_labels) for row in scores])
