"""Self-describing binary container for contexts, keys and ciphertexts.

Layout (all integers little-endian)::

    magic     4 bytes   b"HSVM"
    major     uint16    format major version (readers reject other majors)
    minor     uint16    format minor version
    hlen      uint32    length of the JSON header in bytes
    header    hlen      UTF-8 JSON: {"kind", "params", "chain", "meta", "arrays"}
    payload             raw arrays back to back, in header order

Each ``arrays`` entry is ``{"name", "dtype", "shape"}`` with dtype ``"<u8"``
(residue limbs) or ``"<i8"`` (signed secret coefficients).  The parameter
header lets a reader rebuild the context and check that its prime chain is
exactly the one the material was produced under.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from ..errors import SerializationError
from ..ring import Domain, RingElement, from_signed, ntt_forward
from .context import CkksContext, gen_context
from .params import CkksParams
from .scheme import Ciphertext, KeySet, KeySwitchKey, SecretKey

MAGIC = b"HSVM"
VERSION = (1, 0)
_PREFIX = struct.Struct("<4sHHI")
_DTYPES = {"<u8": np.dtype("<u8"), "<i8": np.dtype("<i8")}


def params_to_dict(params: CkksParams) -> dict:
    return {
        "ring_dim": params.ring_dim,
        "mult_depth": params.mult_depth,
        "scaling_bits": params.scaling_bits,
        "first_mod_bits": params.first_mod_bits,
        "security_level": params.security_level,
        "batch_size": params.batch_size,
        "sigma": params.sigma,
    }


def params_from_dict(d: dict) -> CkksParams:
    try:
        return CkksParams(**d)
    except TypeError as exc:
        raise SerializationError(f"bad parameter header: {exc}") from None


def write_container(fh: BinaryIO, kind: str, ctx: CkksContext, meta: dict,
                    arrays: list[tuple[str, np.ndarray]]) -> None:
    entries = []
    for name, arr in arrays:
        dt = "<i8" if arr.dtype.kind == "i" else "<u8"
        entries.append({"name": name, "dtype": dt, "shape": list(arr.shape)})
    header = json.dumps({
        "kind": kind,
        "params": params_to_dict(ctx.params),
        "chain": [str(q) for q in ctx.ring.primes],
        "meta": meta,
        "arrays": entries,
    }, sort_keys=True).encode("utf-8")
    fh.write(_PREFIX.pack(MAGIC, VERSION[0], VERSION[1], len(header)))
    fh.write(header)
    for (_, arr), entry in zip(arrays, entries):
        fh.write(np.ascontiguousarray(arr, dtype=_DTYPES[entry["dtype"]]).tobytes())


def read_container(fh: BinaryIO, expect_kind: str | None = None,
                   ctx: CkksContext | None = None) -> tuple[dict, CkksContext, dict[str, np.ndarray]]:
    raw = fh.read(_PREFIX.size)
    if len(raw) != _PREFIX.size:
        raise SerializationError("truncated container prefix")
    magic, major, _minor, hlen = _PREFIX.unpack(raw)
    if magic != MAGIC:
        raise SerializationError("not a container file (bad magic)")
    if major != VERSION[0]:
        raise SerializationError(f"unsupported format version {major}")
    try:
        header = json.loads(fh.read(hlen).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SerializationError(f"corrupt header: {exc}") from None
    if expect_kind is not None and header.get("kind") != expect_kind:
        raise SerializationError(f"expected a {expect_kind} container, found {header.get('kind')}")
    params = params_from_dict(header["params"])
    if ctx is None:
        ctx = gen_context(params)
    elif ctx.params != params:
        raise SerializationError("container was written under different parameters")
    if [str(q) for q in ctx.ring.primes] != header["chain"]:
        raise SerializationError("prime chain in the container does not match the rebuilt context")
    arrays = {}
    for entry in header["arrays"]:
        dt = _DTYPES.get(entry["dtype"])
        if dt is None:
            raise SerializationError(f"unsupported dtype {entry['dtype']}")
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        buf = fh.read(nbytes)
        if len(buf) != nbytes:
            raise SerializationError(f"truncated payload for {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(buf, dtype=dt).reshape(shape).astype(dt.newbyteorder("="))
    return header, ctx, arrays


def _elem(ctx: CkksContext, limbs: np.ndarray, offset: int) -> RingElement:
    limbs = np.ascontiguousarray(limbs, dtype=np.uint64)
    if limbs.ndim != 2 or limbs.shape[1] != ctx.n or offset + limbs.shape[0] > len(ctx.ring):
        raise SerializationError(f"ring element of shape {limbs.shape} does not fit the context")
    if np.any(limbs >= ctx.ring.moduli[offset:offset + limbs.shape[0], None]):
        raise SerializationError("residue out of range for its modulus")
    return RingElement(ctx.ring, limbs, Domain.NTT, offset)


def _open_write(path, private: bool = False):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if private:
        fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        os.chmod(path, 0o600)
        return os.fdopen(fd, "wb")
    return open(path, "wb")


def save_context(path, ctx: CkksContext) -> None:
    with _open_write(path) as fh:
        write_container(fh, "context", ctx, {}, [])


def load_context(path) -> CkksContext:
    with open(path, "rb") as fh:
        return read_container(fh, "context")[1]


def save_public_keys(path, ctx: CkksContext, keys: KeySet) -> None:
    """Public, relinearization and rotation keys; never the secret."""
    arrays = [("public.b", keys.public[0].limbs), ("public.a", keys.public[1].limbs)]
    if keys.relin is not None:
        arrays += [("relin.b", keys.relin.b), ("relin.a", keys.relin.a)]
    steps = sorted(keys.rotations)
    for st in steps:
        arrays += [(f"rot{st}.b", keys.rotations[st].b), (f"rot{st}.a", keys.rotations[st].a)]
    meta = {"relin": keys.relin is not None, "rotations": steps}
    with _open_write(path) as fh:
        write_container(fh, "public_keys", ctx, meta, arrays)


def load_public_keys(path, ctx: CkksContext | None = None) -> tuple[CkksContext, KeySet]:
    with open(path, "rb") as fh:
        header, ctx, arr = read_container(fh, "public_keys", ctx)
    meta = header["meta"]
    public = (_elem(ctx, arr["public.b"], 0), _elem(ctx, arr["public.a"], 0))
    relin = KeySwitchKey(arr["relin.b"], arr["relin.a"]) if meta["relin"] else None
    rot = {int(st): KeySwitchKey(arr[f"rot{st}.b"], arr[f"rot{st}.a"]) for st in meta["rotations"]}
    return ctx, KeySet(public, None, relin, rot)


def save_secret_key(path, ctx: CkksContext, sk: SecretKey) -> None:
    """Written with owner-only permissions."""
    with _open_write(path, private=True) as fh:
        write_container(fh, "secret_key", ctx, {}, [("secret.coeffs", sk.coeffs.astype(np.int64))])


def load_secret_key(path, ctx: CkksContext | None = None) -> tuple[CkksContext, SecretKey]:
    with open(path, "rb") as fh:
        _, ctx, arr = read_container(fh, "secret_key", ctx)
    coeffs = arr["secret.coeffs"]
    return ctx, SecretKey(coeffs, ntt_forward(from_signed(ctx.ring, coeffs)))


def save_ciphertexts(path, ctx: CkksContext, cts: list[Ciphertext]) -> None:
    arrays = []
    meta = []
    for i, ct in enumerate(cts):
        meta.append({"scale": ct.scale, "parts": len(ct.parts), "offset": ct.parts[0].offset})
        arrays += [(f"ct{i}.{j}", p.limbs) for j, p in enumerate(ct.parts)]
    with _open_write(path) as fh:
        write_container(fh, "ciphertexts", ctx, {"items": meta}, arrays)


def load_ciphertexts(path, ctx: CkksContext | None = None) -> tuple[CkksContext, list[Ciphertext]]:
    with open(path, "rb") as fh:
        header, ctx, arr = read_container(fh, "ciphertexts", ctx)
    out = []
    for i, m in enumerate(header["meta"]["items"]):
        parts = tuple(_elem(ctx, arr[f"ct{i}.{j}"], m["offset"]) for j in range(m["parts"]))
        out.append(Ciphertext(parts, float(m["scale"])))
    return ctx, out
