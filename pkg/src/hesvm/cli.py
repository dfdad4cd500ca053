"""Command-line entry point: ``hesvm {keygen,train,infer,bench}``.

Exit codes: 0 success (and encrypted accuracy equal to plaintext), 1 usage or
input error, 2 parameter rejection, 3 encrypted/plaintext accuracy divergence.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .bench.data import DATA_ENV, prepare_iris
from .bench.report import emit_report, manifest
from .bench.sweep import BASE_POINT, PARAM_NAMES, SweepGrid, run_sweep
from .ckks import CkksParams, add_rotation_keys, decode, decrypt, encode, encrypt, gen_context, keygen
from .ckks.params import parse_security
from .ckks.serialize import (
    load_context,
    load_public_keys,
    load_secret_key,
    save_context,
    save_public_keys,
    save_secret_key,
)
from .errors import HesvmError, InvalidParams, OutOfLevels, SecurityBudgetExceeded
from .inference import EncryptedModel, InferenceOptions, infer_testset, required_depth, required_rotations
from .svm import Kernel, TrainConfig, load_model, save_model, train_linear_ovr, train_poly_dual_ovr

EXIT_OK, EXIT_USAGE, EXIT_PARAMS, EXIT_DIVERGED = 0, 1, 2, 3
CONTEXT_FILE = "context.hsvm"
PUBLIC_FILE = "public_keys.hsvm"
SECRET_FILE = "secret_key.hsvm"
ROUND_TRIP = [1.5, 2.0, 3.5]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _on_off(value: str) -> bool:
    v = value.lower()
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return v == "on"


@dataclass(frozen=True)
class CliConfig:
    """Parsed command line; ``None`` parameter fields mean "use the default"."""

    command: str
    ring_dim: int | None
    mult_depth: int | None
    scale_bits: int | None
    first_mod_bits: int | None
    security: str | None
    batch_size: int | None
    kernel: Kernel
    degree: int
    gamma: float
    coef0: float
    seed: int
    reps: int
    data: Path | None
    model_dir: Path | None
    key_dir: Path | None
    out: Path | None
    fmt: str
    mask: bool
    encrypt_weights: bool
    samples: int | None
    grid: str
    max_ring_dim: int | None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> CliConfig:
        return cls(
            command=ns.command, ring_dim=ns.ring_dim, mult_depth=ns.mult_depth, scale_bits=ns.scale_bits,
            first_mod_bits=ns.first_mod_bits, security=ns.security, batch_size=ns.batch_size,
            kernel=Kernel.parse(ns.kernel), degree=ns.degree, gamma=ns.gamma, coef0=ns.coef0, seed=ns.seed,
            reps=ns.reps, data=ns.data, model_dir=ns.model_dir, key_dir=ns.key_dir, out=ns.out, fmt=ns.format,
            mask=ns.mask, encrypt_weights=ns.encrypt_weights, samples=getattr(ns, "samples", None),
            grid=getattr(ns, "grid", "default"), max_ring_dim=getattr(ns, "max_ring_dim", None),
        )

    @property
    def options(self) -> InferenceOptions:
        return InferenceOptions(mask=self.mask, encrypt_weights=self.encrypt_weights)

    def params(self, kernel: Kernel | None = None) -> CkksParams:
        """Encryption parameters; the depth defaults to what ``kernel`` needs."""
        kernel = self.kernel if kernel is None else kernel
        depth = self.mult_depth
        if depth is None:
            depth = required_depth(kernel, self.degree, self.mask)
        p = CkksParams(mult_depth=depth)
        changes = {"ring_dim": self.ring_dim, "scaling_bits": self.scale_bits,
                   "first_mod_bits": self.first_mod_bits, "batch_size": self.batch_size}
        p = p.with_(**{k: v for k, v in changes.items() if v is not None})
        if self.security is not None:
            p = p.with_(security_level=parse_security(self.security))
        return p


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("encryption parameters")
    g.add_argument("--ring-dim", type=int, help="ring dimension N (default 16384)")
    g.add_argument("--mult-depth", type=int, help="multiplicative depth (default: what the kernel needs)")
    g.add_argument("--scale-bits", type=int, help="scaling factor bits S (default 30)")
    g.add_argument("--first-mod-bits", type=int, help="first modulus bits M (default 60)")
    g.add_argument("--security", choices=["128", "192", "256", "none"], help="security level (default 128)")
    g.add_argument("--batch-size", type=int, help="slots per ciphertext (default 1024)")
    m = common.add_argument_group("model")
    m.add_argument("--kernel", default="linear", choices=["linear", "poly-primal", "poly-dual"])
    m.add_argument("--degree", type=int, default=3)
    m.add_argument("--gamma", type=float, default=2.0)
    m.add_argument("--coef0", type=float, default=0.0)
    m.add_argument("--mask", type=_on_off, default=False, metavar="{on,off}",
                   help="zero every slot but the scores (one extra level)")
    m.add_argument("--encrypt-weights", type=_on_off, default=False, metavar="{on,off}",
                   help="encrypt model weights instead of encoding them as plaintexts")
    r = common.add_argument_group("run")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--reps", type=int, default=5, help="timed repetitions per benchmark point")
    r.add_argument("--data", type=Path, help=f"Iris CSV file (default: ${DATA_ENV}/iris.csv or the bundled copy)")
    r.add_argument("--model-dir", type=Path)
    r.add_argument("--key-dir", type=Path)
    r.add_argument("--out", type=Path, help="output directory for reports")
    r.add_argument("--format", default="markdown", choices=["csv", "markdown"])

    parser = _Parser(prog="hesvm", description="Encrypted SVM inference on RNS-CKKS.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("keygen", parents=[common], help="generate context and keys into --key-dir")
    sub.add_parser("train", parents=[common], help="train linear and polynomial models into --model-dir")
    p = sub.add_parser("infer", parents=[common], help="encrypted vs plaintext inference on the test split")
    p.add_argument("--samples", type=int, help="only the first N test samples")
    p = sub.add_parser("bench", parents=[common], help="parameter sweep for the linear and a polynomial kernel")
    p.add_argument("--grid", default="default", choices=["default", "point"],
                   help="'point' runs the single point given by the parameter flags")
    p.add_argument("--max-ring-dim", type=int, help="skip larger ring dimensions (flagged in the report)")
    return parser


def _data(cfg: CliConfig):
    path = cfg.data
    if path is not None and path.is_dir():
        path = path / "iris.csv"
    train, test = prepare_iris(path)
    return train, test


def _train(cfg: CliConfig, train):
    tc = TrainConfig(seed=cfg.seed)
    linear = train_linear_ovr(train.x, train.y, tc)
    return replace(linear, degree=cfg.degree, gamma=cfg.gamma, coef0=cfg.coef0), tc


def _model(cfg: CliConfig, train):
    """The model for ``cfg.kernel``: loaded from ``--model-dir`` or trained in-process."""
    if cfg.model_dir is not None:
        return load_model(cfg.model_dir, cfg.kernel)
    linear, tc = _train(cfg, train)
    if cfg.kernel is Kernel.POLY_DUAL:
        return train_poly_dual_ovr(train.x, train.y, tc, cfg.degree, cfg.gamma, cfg.coef0)
    if cfg.kernel is Kernel.POLY_PRIMAL:
        return linear.with_kernel(Kernel.POLY_PRIMAL)
    return linear


def cmd_keygen(cfg: CliConfig) -> int:
    if cfg.key_dir is None:
        raise UsageError("keygen needs --key-dir")
    params = cfg.params()
    ctx = gen_context(params)
    rng = np.random.default_rng(cfg.seed)
    steps = []
    if cfg.model_dir is not None:
        steps = required_rotations(load_model(cfg.model_dir, cfg.kernel), cfg.options)
    keys = keygen(ctx, rng, rotations=steps)
    cfg.key_dir.mkdir(parents=True, exist_ok=True)
    save_context(cfg.key_dir / CONTEXT_FILE, ctx)
    save_public_keys(cfg.key_dir / PUBLIC_FILE, ctx, keys)
    save_secret_key(cfg.key_dir / SECRET_FILE, ctx, keys.secret)
    print(f"Context: N={params.ring_dim}, depth={params.mult_depth}, scale=2^{params.scaling_bits}, "
          f"first modulus {params.first_mod_bits} bits, log2(QP)={ctx.total_bits}, "
          f"security={params.security_level or 'none'}")
    print(f"Rotation keys: {sorted(keys.rotations)}")
    print(f"Keys written to {cfg.key_dir} (secret key: {cfg.key_dir / SECRET_FILE})")
    return EXIT_OK


def cmd_train(cfg: CliConfig) -> int:
    if cfg.model_dir is None:
        raise UsageError("train needs --model-dir")
    train, test = _data(cfg)
    print("Standardisation results:")
    for i, name in enumerate(train.feature_names):
        col = train.x[:, i]
        print(f"{name}: mean={col.mean() + 0.0:.3f}, std={col.std(ddof=1):.3f}")
    print(f"Training samples: {len(train)}")
    print(f"Testing samples: {len(test)}")
    print(f"Number of selected features: {train.n_features}")
    print("---- Starting Models Training ----")
    print("Starting SVM Linear")
    linear, tc = _train(cfg, train)
    print("SVM Linear Completed")
    print("Starting SVM Poly")
    poly = train_poly_dual_ovr(train.x, train.y, tc, cfg.degree, cfg.gamma, cfg.coef0)
    print("SVM Poly Completed")
    print("---- Model Training Completed! ----")
    save_model(poly, cfg.model_dir)
    save_model(linear, cfg.model_dir)
    print("All results saved successfully!")
    return EXIT_OK


def _keys(cfg: CliConfig, kernel: Kernel, rng):
    if cfg.key_dir is None:
        ctx = gen_context(cfg.params(kernel))
        return ctx, keygen(ctx, rng, default_rotations=False)
    ctx = load_context(cfg.key_dir / CONTEXT_FILE)
    _, keys = load_public_keys(cfg.key_dir / PUBLIC_FILE, ctx)
    _, sk = load_secret_key(cfg.key_dir / SECRET_FILE, ctx)
    return ctx, replace(keys, secret=sk)


def cmd_infer(cfg: CliConfig) -> int:
    train, test = _data(cfg)
    model = _model(cfg, train)
    rng = np.random.default_rng(cfg.seed)
    ctx, keys = _keys(cfg, model.kernel, rng)
    need = required_depth(model.kernel, model.degree, cfg.mask)
    if ctx.max_level < need:
        raise OutOfLevels(f"{model.kernel.value} needs depth {need}; the context has {ctx.max_level}")
    keys = add_rotation_keys(ctx, keys, required_rotations(model, cfg.options), rng)

    print("---- Testing Encryption ----")
    print(f"Original data: {ROUND_TRIP}")
    pt = decrypt(ctx, encrypt(ctx, encode(ctx, ROUND_TRIP), keys.public, rng), keys.secret)
    print(f"Decrypted values (real part): {list(map(float, decode(ctx, pt)[:len(ROUND_TRIP)]))}")

    x, y = test.x, test.y
    if cfg.samples is not None:
        x, y = x[:cfg.samples], y[:cfg.samples]
    em = EncryptedModel(ctx, model, cfg.options, keys.public, rng)
    title = "Linear" if model.kernel is Kernel.LINEAR else "Poly"
    print(f"---- Running Encrypted {title} SVM ----")
    res = infer_testset(x, y, em, keys, rng)
    print(f"Avg Encrypted SVM Accuracy: {res.encrypted_accuracy:.4f}")
    print(f"Avg Non-Encrypted SVM Accuracy: {res.plain_accuracy:.4f}")
    print(f"Avg Encrypted Time: {res.encrypted_time:.4f} sec")
    print(f"Avg Non-Encrypted Time: {res.plain_time:.4f} sec")
    print(f"Scale-up: {res.scale_up:,.1f}")
    print(f"Max score error: {res.max_slot_error:.3e}")
    agree = int(np.sum(res.encrypted_labels == res.plain_labels))
    print(f"Label agreement: {agree}/{len(y)}")
    if res.encrypted_accuracy != res.plain_accuracy:
        print("Encrypted and plaintext accuracies diverge", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _point(cfg: CliConfig) -> dict:
    p = cfg.params(Kernel.LINEAR)
    return {"MD": p.mult_depth, "SS": p.scaling_bits, "FM": p.first_mod_bits, "SL": p.security_level,
            "BS": p.batch_size, "RD": p.ring_dim}


def cmd_bench(cfg: CliConfig) -> int:
    if cfg.out is None:
        raise UsageError("bench needs --out")
    if cfg.reps < 1:
        raise UsageError("--reps must be >= 1")
    if cfg.security == "none":
        raise UsageError("bench sweeps the security level; --security none is not meaningful here")
    base = {**BASE_POINT, **_point(cfg)}
    if cfg.grid == "point":
        values = {"MD": [base["MD"]]} if cfg.mult_depth is not None else {}
        grid = SweepGrid(values=values, base=base, reps=cfg.reps, max_ring_dim=cfg.max_ring_dim)
    else:
        grid = SweepGrid(base=base, reps=cfg.reps, max_ring_dim=cfg.max_ring_dim)
    train, test = _data(cfg)
    poly_kernel = Kernel.POLY_DUAL if cfg.kernel is Kernel.POLY_DUAL else Kernel.POLY_PRIMAL
    linear = _model(replace(cfg, kernel=Kernel.LINEAR), train)
    poly = _model(replace(cfg, kernel=poly_kernel), train)

    def progress(rec, secs):
        vals = " ".join(f"{k}={getattr(rec, k)}" for k in PARAM_NAMES)
        extra = f" AEA={rec.AEA:.3f} NEA={rec.NEA:.3f} AET={rec.AET:.4f}s" if rec.AEA is not None else ""
        print(f"[{rec.kernel}] {rec.block:2s} {vals} -> {rec.status.value}{extra} ({secs:.1f}s)", flush=True)

    t0 = time.perf_counter()
    records = []
    for model in (linear, poly):
        records += run_sweep(grid, model, test, cfg.seed, cfg.options, progress)
    elapsed = time.perf_counter() - t0
    cfg.out.mkdir(parents=True, exist_ok=True)
    suffix = "csv" if cfg.fmt == "csv" else "md"
    report = cfg.out / f"report.{suffix}"
    report.write_text(emit_report(records, cfg.fmt, capped=grid.capped))
    (cfg.out / "manifest.json").write_text(
        manifest(records, grid, cfg.seed, {"kernels": [linear.kernel.value, poly.kernel.value],
                                           "elapsed_sec": elapsed, "ring_dim_capped": grid.capped}))
    print(f"Report written to {report} ({len(records)} rows, {elapsed:.0f}s)")
    return EXIT_DIVERGED if any(r.diverged for r in records) else EXIT_OK


def _fail_fast(cfg: CliConfig) -> None:
    """Reject bad parameters before loading data or generating keys."""
    if cfg.command == "keygen" or (cfg.command == "infer" and cfg.key_dir is None):
        gen_context(cfg.params())
    elif cfg.command == "bench":
        cfg.params(Kernel.LINEAR).validate()


COMMANDS = {"keygen": cmd_keygen, "train": cmd_train, "infer": cmd_infer, "bench": cmd_bench}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    cfg = CliConfig.from_args(ns)
    try:
        _fail_fast(cfg)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"hesvm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidParams, SecurityBudgetExceeded, OutOfLevels) as exc:
        print(f"hesvm: parameter rejected: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except HesvmError as exc:
        print(f"hesvm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
