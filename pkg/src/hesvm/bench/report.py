"""Render sweep records as CSV or markdown tables, and write the run manifest."""

from __future__ import annotations

import csv
import io
import json
import platform
import sys
from itertools import groupby

from .sweep import PARAM_NAMES, BenchRecord, Status, SweepGrid

RESULT_NAMES = ("AEA", "NEA", "AET", "ANT", "scale_up")
CSV_COLUMNS = ("kernel", "block") + PARAM_NAMES + RESULT_NAMES + ("status", "depth_ok", "detail")
_INT = set(PARAM_NAMES)
_FLOAT = set(RESULT_NAMES)


def _fmt_float(v) -> str:
    return "" if v is None else repr(float(v))


def _fmt_bool(v) -> str:
    return "" if v is None else str(bool(v)).lower()


def to_csv(records: list[BenchRecord]) -> str:
    """Columns: kernel, block, MD..RD, AEA..scale_up, status, depth_ok, detail.  Floats use ``repr``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = [r.kernel, r.block] + [getattr(r, k) for k in PARAM_NAMES]
        row += [_fmt_float(getattr(r, k)) for k in RESULT_NAMES]
        row += [r.status.value, _fmt_bool(r.depth_ok), r.detail]
        w.writerow(row)
    return buf.getvalue()


def parse_csv(text: str) -> list[BenchRecord]:
    """Inverse of :func:`to_csv`."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw = {}
        for k, v in row.items():
            if k in _INT:
                kw[k] = int(v)
            elif k in _FLOAT:
                kw[k] = float(v) if v else None
            elif k == "status":
                kw[k] = Status(v)
            elif k == "depth_ok":
                kw[k] = None if v == "" else v == "true"
            else:
                kw[k] = v
        out.append(BenchRecord(**kw))
    return out


def _md_cell(r: BenchRecord, name: str) -> str:
    if r.status is not Status.OK:
        return "-"
    v = getattr(r, name)
    if name in ("AEA", "NEA"):
        return f"{v:.3f}"
    if name == "AET":
        return f"{v:.4f}"
    if name == "ANT":
        return f"{v:.2e}"
    return f"{v:,.1f}"


def to_markdown(records: list[BenchRecord], capped: bool = False) -> str:
    """One table per kernel; sweep blocks are separated by a rule row.

    Rows whose AEA differs from NEA are flagged in the status column.
    """
    header = PARAM_NAMES + ("AEA", "NEA", "AET (s)", "ANT (s)", "scale-up", "status")
    lines = []
    for kernel, krecs in groupby(records, key=lambda r: r.kernel):
        lines += [f"### {kernel}", "", "| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        first = True
        for _, brecs in groupby(krecs, key=lambda r: r.block):
            if not first:
                lines.append("|" + " |" * len(header))
            first = False
            for r in brecs:
                status = r.status.value + (" (diverged)" if r.diverged else "")
                cells = [f"{getattr(r, k):,}" if k in ("BS", "RD") else str(getattr(r, k)) for k in PARAM_NAMES]
                cells += [_md_cell(r, k) for k in RESULT_NAMES] + [status]
                lines.append("| " + " | ".join(cells) + " |")
        lines.append("")
    if capped:
        lines.append("Ring dimensions above the configured cap were not run.")
        lines.append("")
    return "\n".join(lines)


def emit_report(records: list[BenchRecord], fmt: str = "csv", capped: bool = False) -> str:
    if not records:
        raise ValueError("no records to report")
    if fmt == "csv":
        return to_csv(records)
    if fmt == "markdown":
        return to_markdown(records, capped)
    raise ValueError(f"unknown report format {fmt!r}")


def manifest(records: list[BenchRecord], grid: SweepGrid, seed: int, extra: dict | None = None) -> str:
    """Machine-readable provenance: grid, seed, host and per-point statuses.  Holds no key material."""
    doc = {
        "seed": seed,
        "grid": {"values": grid.values, "base": grid.base, "reps": grid.reps, "max_ring_dim": grid.max_ring_dim},
        "host": {"python": sys.version.split()[0], "platform": platform.platform(),
                 "machine": platform.machine(), "processor": platform.processor()},
        "points": [{"kernel": r.kernel, "block": r.block, **r.params, "status": r.status.value,
                    "depth_ok": r.depth_ok, "detail": r.detail} for r in records],
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2) + "\n"

