"""Model directory persistence as whitespace-separated decimal text.

Files (one row per line, 17 significant digits):

- ``weights.txt``: ``C x F`` primal weights, ``intercept.txt``: ``C`` biases.
- ``dual_coef.txt``: ``C x S``, ``support_vectors.txt``: ``S x F``,
  ``intercept_poly.txt``: ``C`` biases of the dual model.
- ``labels.txt``: one integer label per line.
- ``kernel.json``: kernel kind, degree, gamma, coef0.

A directory written by ``numpy.savetxt`` from a fitted binary toolkit SVC
loads unchanged (missing ``labels.txt``/``kernel.json`` fall back to defaults).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import MalformedRow, MissingFile
from .model import Kernel, SvmModel

FMT = "%.17g"
KERNEL_FILE = "kernel.json"


def _read_matrix(path: Path) -> np.ndarray:
    if not path.exists():
        raise MissingFile(f"missing model file {path}")
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                row = [float(tok) for tok in line.split()]
            except ValueError:
                raise MalformedRow(f"{path}:{lineno}: non-numeric value") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise MalformedRow(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
            rows.append(row)
    if not rows:
        raise MalformedRow(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def _read_vector(path: Path) -> np.ndarray:
    return _read_matrix(path).ravel()


def save_model(model: SvmModel, directory) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    if model.weights is not None:
        np.savetxt(out / "weights.txt", model.weights, fmt=FMT)
        np.savetxt(out / "intercept.txt", model.intercepts, fmt=FMT)
    if model.kernel is Kernel.POLY_DUAL:
        np.savetxt(out / "dual_coef.txt", model.dual_coefs, fmt=FMT)
        np.savetxt(out / "support_vectors.txt", model.support_vectors, fmt=FMT)
        np.savetxt(out / "intercept_poly.txt", model.intercepts, fmt=FMT)
    np.savetxt(out / "labels.txt", np.array(model.class_labels, dtype=np.int64), fmt="%d")
    meta = {"kernel": model.kernel.value, "degree": model.degree, "gamma": model.gamma, "coef0": model.coef0}
    (out / KERNEL_FILE).write_text(json.dumps(meta, indent=2) + "\n")
    return out


def load_model(directory, kernel=None) -> SvmModel:
    """Load a model directory; ``kernel`` overrides the stored kind.

    Raises:
        MissingFile: a required file is absent.
        MalformedRow: ragged rows, non-numeric cells, or shapes that disagree.
    """
    d = Path(directory)
    if not d.is_dir():
        raise MissingFile(f"model directory {d} not found")
    meta = {"kernel": "linear", "degree": 3, "gamma": 2.0, "coef0": 0.0}
    if (d / KERNEL_FILE).exists():
        meta.update(json.loads((d / KERNEL_FILE).read_text()))
    if kernel is None and not (d / KERNEL_FILE).exists() and not (d / "weights.txt").exists():
        meta["kernel"] = Kernel.POLY_DUAL.value
    kind = Kernel.parse(kernel if kernel is not None else meta["kernel"])
    weights = sv = dual = None
    if kind is Kernel.POLY_DUAL:
        dual = _read_matrix(d / "dual_coef.txt")
        sv = _read_matrix(d / "support_vectors.txt")
        intercepts = _read_vector(d / "intercept_poly.txt")
        if dual.shape != (intercepts.size, sv.shape[0]):
            raise MalformedRow(
                f"dual_coef.txt is {dual.shape[0]}x{dual.shape[1]} but there are {intercepts.size} "
                f"intercepts and {sv.shape[0]} support vectors"
            )
    else:
        weights = _read_matrix(d / "weights.txt")
        intercepts = _read_vector(d / "intercept.txt")
        if weights.shape[0] != intercepts.size:
            raise MalformedRow(f"weights.txt has {weights.shape[0]} rows for {intercepts.size} intercepts")
    c = intercepts.size
    if (d / "labels.txt").exists():
        labels = tuple(int(v) for v in _read_vector(d / "labels.txt"))
    else:
        labels = (-1, 1) if c == 1 else tuple(range(c))
    try:
        return SvmModel(kind, intercepts, labels, weights=weights, degree=int(meta["degree"]),
                        gamma=float(meta["gamma"]), coef0=float(meta["coef0"]),
                        support_vectors=sv, dual_coefs=dual)
    except ValueError as exc:
        raise MalformedRow(str(exc)) from None
