"""One-factor-at-a-time parameter sweep over the six encryption parameters."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from itertools import groupby

import numpy as np

from ..ckks import CkksParams, KeySet, gen_context, keygen
from ..errors import InvalidParams, OutOfLevels, SecurityBudgetExceeded
from ..inference import (
    EncryptedModel,
    InferenceOptions,
    classify_encrypted,
    plain_inference_time,
    required_depth,
    required_rotations,
)
from ..svm.model import Kernel, SvmModel
from .data import Dataset

PARAM_NAMES = ("MD", "SS", "FM", "SL", "BS", "RD")
_FIELD = {"MD": "mult_depth", "SS": "scaling_bits", "FM": "first_mod_bits",
          "SL": "security_level", "BS": "batch_size", "RD": "ring_dim"}
BASE_POINT = {"MD": 1, "SS": 30, "FM": 60, "SL": 128, "BS": 1024, "RD": 16384}
_KERNEL_IDS = {Kernel.LINEAR: 0, Kernel.POLY_PRIMAL: 1, Kernel.POLY_DUAL: 2}


class Status(str, enum.Enum):
    OK = "ok"
    INFEASIBLE = "infeasible"
    SECURITY_REJECTED = "security_rejected"


@dataclass(frozen=True)
class SweepGrid:
    """Values to sweep per parameter; each block varies one parameter from ``base``.

    Attributes:
        values: Parameter name (``MD``, ``SS``, ``FM``, ``SL``, ``BS``, ``RD``) to swept values.
        base: The fixed point every block starts from.
        reps: Timed repetitions per point (the median is reported).
        max_ring_dim: Skip ring dimensions above this (recorded in the report as capped).
    """

    values: dict = field(default_factory=lambda: {
        "MD": [1, 2, 3, 4, 5, 6, 7],
        "SS": [10, 20, 30, 40, 50],
        "FM": [20, 30, 40, 50, 60],
        "SL": [128, 192, 256],
        "BS": [128, 256, 512, 1024, 2048, 4096],
        "RD": [16384, 32768, 65536, 131072],
    })
    base: dict = field(default_factory=lambda: dict(BASE_POINT))
    reps: int = 5
    max_ring_dim: int | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        unknown = set(self.values) - set(PARAM_NAMES)
        if unknown or set(self.base) != set(PARAM_NAMES):
            raise ValueError(f"grid parameters must be drawn from {PARAM_NAMES}")

    def with_min_depth(self, depth: int) -> SweepGrid:
        """Raise the base depth to ``depth`` (the polynomial arms start from ``MD=3``)."""
        if self.base["MD"] >= depth:
            return self
        return replace(self, base={**self.base, "MD": depth})

    def points(self) -> list[tuple[str, dict]]:
        """``(block, point)`` pairs in block order; ring dimensions above the cap are dropped.

        A grid with no swept values yields just the base point (block ``"base"``).
        """
        if not any(self.values.values()):
            return [("base", dict(self.base))]
        out = []
        for name in PARAM_NAMES:
            for v in self.values.get(name, []):
                if name == "RD" and self.max_ring_dim is not None and v > self.max_ring_dim:
                    continue
                point = dict(self.base)
                point[name] = v
                if self.max_ring_dim is not None and point["RD"] > self.max_ring_dim:
                    continue
                out.append((name, point))
        return out

    @property
    def capped(self) -> bool:
        return self.max_ring_dim is not None and any(v > self.max_ring_dim for v in self.values.get("RD", []))


@dataclass(frozen=True)
class BenchRecord:
    """One grid point's outcome.

    ``depth_ok``: whether the static depth calculator's verdict matched the
    runtime (``None`` when the parameters cannot form a context at all).
    """

    kernel: str
    block: str
    MD: int
    SS: int
    FM: int
    SL: int
    BS: int
    RD: int
    AEA: float | None = None
    NEA: float | None = None
    AET: float | None = None
    ANT: float | None = None
    scale_up: float | None = None
    status: Status = Status.OK
    depth_ok: bool | None = None
    detail: str = ""

    @property
    def params(self) -> dict:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    @property
    def diverged(self) -> bool:
        return self.status is Status.OK and self.AEA != self.NEA



def params_for(point: dict) -> CkksParams:
    return CkksParams(**{_FIELD[k]: v for k, v in point.items()})


def point_seed(master: int, kernel, point: dict) -> np.random.SeedSequence:
    """Seed derived from the point's values, so a point's outcome does not depend on grid order."""
    return np.random.SeedSequence([master, _KERNEL_IDS[Kernel.parse(kernel)]] + [point[k] for k in PARAM_NAMES])


def _probe_depth(params: CkksParams, model: SvmModel, options: InferenceOptions, x: np.ndarray,
                 rng: np.random.Generator) -> bool:
    """True when one encrypted evaluation completes, False on OutOfLevels."""
    ctx = gen_context(params)
    keys = keygen(ctx, rng, rotations=required_rotations(model, options), default_rotations=False)
    em = EncryptedModel(ctx, model, options, keys.public, rng)
    try:
        classify_encrypted(x, em, keys, rng)
    except OutOfLevels:
        return False
    return True


@dataclass
class _Live:
    """A point that passed setup and is ready for timed passes."""

    rec: BenchRecord
    em: EncryptedModel
    keys: KeySet
    rng: np.random.Generator
    aea: float | None = None
    nea: float | None = None
    aets: list = field(default_factory=list)
    ants: list = field(default_factory=list)


def _prepare(point: dict, block: str, model: SvmModel, test: Dataset, seed: int,
             options: InferenceOptions) -> BenchRecord | _Live:
    """Build keys and run the discarded warm-up sample; failures become final records."""
    rec = BenchRecord(kernel=model.kernel.value, block=block, **point)
    rng = np.random.default_rng(point_seed(seed, model.kernel, point))
    params = params_for(point)
    predicted = point["MD"] >= required_depth(model.kernel, model.degree, options.mask)
    try:
        params.validate()
    except InvalidParams as exc:
        return replace(rec, status=Status.INFEASIBLE, detail=str(exc))
    try:
        ctx = gen_context(params)
    except SecurityBudgetExceeded as exc:
        observed = _probe_depth(params.with_(security_level=None), model, options, test.x[0], rng)
        return replace(rec, status=Status.SECURITY_REJECTED, depth_ok=observed == predicted, detail=str(exc))
    except InvalidParams as exc:
        return replace(rec, status=Status.INFEASIBLE, detail=str(exc))
    keys = keygen(ctx, rng, rotations=required_rotations(model, options), default_rotations=False)
    em = EncryptedModel(ctx, model, options, keys.public, rng)
    try:
        classify_encrypted(test.x[0], em, keys, rng)
    except OutOfLevels as exc:
        return replace(rec, status=Status.INFEASIBLE, depth_ok=not predicted, detail=f"out of levels: {exc}")
    return _Live(replace(rec, depth_ok=predicted), em, keys, rng)


def _timed_pass(live: _Live, model: SvmModel, test: Dataset) -> None:
    results = [classify_encrypted(row, live.em, live.keys, live.rng) for row in test.x]
    if live.aea is None:
        live.aea = float(np.mean(np.array([r.label for r in results]) == test.y))
    live.aets.append(float(np.mean([r.total_time for r in results])))
    plain_labels, ant = plain_inference_time(model, test.x)
    live.nea = float(np.mean(plain_labels == test.y))
    live.ants.append(ant)


def _finish(live: _Live) -> BenchRecord:
    aet, ant = float(np.median(live.aets)), float(np.median(live.ants))
    return replace(live.rec, AEA=live.aea, NEA=live.nea, AET=aet, ANT=ant, scale_up=aet / ant)


def run_point(point: dict, block: str, model: SvmModel, test: Dataset, reps: int = 5, seed: int = 0,
              options: InferenceOptions = InferenceOptions()) -> BenchRecord:
    """Benchmark one point: a discarded warm-up sample, then ``reps`` timed passes over the test set.

    AEA comes from the first timed pass; AET and ANT are medians of the
    per-pass mean per-sample times.  Failures become statuses.
    """
    live = _prepare(point, block, model, test, seed, options)
    if isinstance(live, BenchRecord):
        return live
    for _ in range(reps):
        _timed_pass(live, model, test)
    return _finish(live)


def run_sweep(grid: SweepGrid, model: SvmModel, test: Dataset, seed: int = 0,
              options: InferenceOptions = InferenceOptions(), progress=None) -> list[BenchRecord]:
    """One record per grid point, in block order.

    Within a block the timed passes are interleaved (pass 1 of every point,
    then pass 2, ...) so slow drifts in machine speed spread over all points
    instead of biasing the trend.  A point that appears in several blocks
    (the base point) is measured once and relabelled.  ``progress`` is
    called with each newly measured record and its wall time.
    """
    grid = grid.with_min_depth(required_depth(model.kernel, model.degree, options.mask))
    done: dict[tuple, BenchRecord] = {}
    out = []
    for block, group in groupby(grid.points(), key=lambda bp: bp[0]):
        points = [p for _, p in group]
        fresh: dict[tuple, BenchRecord | _Live] = {}
        spent: dict[tuple, float] = {}
        for point in points:
            key = tuple(point[k] for k in PARAM_NAMES)
            if key not in done and key not in fresh:
                t0 = time.perf_counter()
                fresh[key] = _prepare(point, block, model, test, seed, options)
                spent[key] = time.perf_counter() - t0
        live = {k: v for k, v in fresh.items() if isinstance(v, _Live)}
        for _ in range(grid.reps):
            for key, item in live.items():
                t0 = time.perf_counter()
                _timed_pass(item, model, test)
                spent[key] += time.perf_counter() - t0
        for key, item in fresh.items():
            done[key] = _finish(item) if isinstance(item, _Live) else item
            if progress is not None:
                progress(done[key], spent[key])
        out += [replace(done[tuple(p[k] for k in PARAM_NAMES)], block=block) for p in points]
    return out


def one_point_grid(point: dict | None = None, reps: int = 5) -> SweepGrid:
    """A grid with the single ``point`` (missing entries from the base point)."""
    return SweepGrid(values={}, base={**BASE_POINT, **(point or {})}, reps=reps)
