"""Dataset ingestion, stratified splitting and standardization."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import DegenerateData, MalformedRow, MissingFile, UnknownLabel, ZeroVariance

DATA_ENV = "HESVM_DATA_DIR"
IRIS_FILE = "iris.csv"
IRIS_LABELS = {
    "setosa": 0, "iris-setosa": 0, "iris setosa": 0,
    "versicolor": 1, "iris-versicolor": 1, "iris versicolor": 1,
    "virginica": 2, "iris-virginica": 2, "iris virginica": 2,
}


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


@dataclass(frozen=True, eq=False)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    scaler: Standardization | None = field(default=None)

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]


def default_iris_path() -> Path:
    """``$HESVM_DATA_DIR/iris.csv`` if the variable is set, else the bundled copy."""
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env) / IRIS_FILE
    return Path(str(resources.files("hesvm") / "data" / IRIS_FILE))


def _label(token: str, lineno: int, path) -> int:
    t = token.strip()
    try:
        return int(t)
    except ValueError:
        pass
    key = t.strip('"').lower()
    if key in IRIS_LABELS:
        return IRIS_LABELS[key]
    raise UnknownLabel(f"{path}:{lineno}: unknown label {t!r}")


def load_iris(path=None) -> Dataset:
    """Load a comma-separated file: a header row, numeric feature columns, one label column.

    Labels may be integers or Iris species names (mapped to 0/1/2).

    Raises:
        MissingFile: the file does not exist.
        MalformedRow: empty file, ragged row or non-numeric feature (the message names the line).
        UnknownLabel: a label that is neither an integer nor a species name.
    """
    path = Path(path) if path is not None else default_iris_path()
    if not path.exists():
        raise MissingFile(f"data file {path} not found")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [(i, r) for i, r in enumerate(rows, 1) if any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise MalformedRow(f"{path}: no data rows")
    _, header = rows[0]
    width = len(header)
    if width < 2:
        raise MalformedRow(f"{path}:1: need at least one feature and a label column")
    xs, ys = [], []
    for lineno, row in rows[1:]:
        if len(row) != width:
            raise MalformedRow(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
        try:
            xs.append([float(c) for c in row[:-1]])
        except ValueError:
            raise MalformedRow(f"{path}:{lineno}: non-numeric feature value") from None
        ys.append(_label(row[-1], lineno, path))
    return Dataset(np.array(xs), np.array(ys, dtype=np.int64), tuple(h.strip() for h in header[:-1]))


def split_train_test(ds: Dataset, fraction: float = 0.8, seed: int = 42) -> tuple[Dataset, Dataset]:
    """Stratified split; each class contributes ``round((1 - fraction) * size)`` test rows.

    Raises:
        ValueError: ``fraction`` outside (0, 1).
        DegenerateData: a class with fewer than two rows, or one left without a train or test row.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in np.unique(ds.y):
        idx = np.flatnonzero(ds.y == c)
        if idx.size < 2:
            raise DegenerateData(f"class {c} has fewer than 2 samples")
        n_test = int(round((1.0 - fraction) * idx.size))
        if n_test == 0 or n_test == idx.size:
            raise DegenerateData(f"fraction {fraction} leaves class {c} without a train or test sample")
        perm = rng.permutation(idx)
        test_idx.extend(perm[:n_test])
        train_idx.extend(perm[n_test:])
    tr = np.sort(np.array(train_idx))
    te = np.sort(np.array(test_idx))
    return (Dataset(ds.x[tr], ds.y[tr], ds.feature_names),
            Dataset(ds.x[te], ds.y[te], ds.feature_names))


def standardize(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset, Standardization]:
    """Fit mean and population std on ``train``; apply to both.

    Raises:
        ZeroVariance: a constant training feature.
    """
    if len(train) == 0:
        raise DegenerateData("empty training set")
    mean = train.x.mean(axis=0)
    std = train.x.std(axis=0)
    if np.any(std == 0):
        bad = [train.feature_names[i] for i in np.flatnonzero(std == 0)]
        raise ZeroVariance(f"zero-variance features: {bad}")
    sc = Standardization(mean, std)
    return (replace(train, x=sc.apply(train.x), scaler=sc),
            replace(test, x=sc.apply(test.x), scaler=sc), sc)


def prepare_iris(path=None, seed: int = 42, fraction: float = 0.8) -> tuple[Dataset, Dataset]:
    """Load, split and standardize: the preprocessing every experiment uses."""
    train, test = split_train_test(load_iris(path), fraction, seed)
    train, test, _ = standardize(train, test)
    return train, test
