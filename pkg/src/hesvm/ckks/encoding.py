"""Canonical-embedding encoder with sparse (replicated) slot packing.

A ``B``-slot vector is tiled ``N/(2B)`` times across the ``N/2`` available
slots.  Rotations by ``k`` then act modulo ``B`` on every replica, and the
decoder averages the replicas, which projects the decryption noise onto the
subspace of valid encodings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import LevelMismatch, TooManySlots
from ..ring import RingElement, crt_float, from_bigints, from_signed, ntt_forward
from .context import CkksContext

_INT64_SAFE = float(2 ** 62)


@dataclass(frozen=True)
class Plaintext:
    """An encoded vector: ``poly`` (NTT domain) carries ``round(scale * m)``."""

    poly: RingElement
    scale: float
    slot_count: int

    @property
    def level(self) -> int:
        return self.poly.level


def _slot_vector(ctx: CkksContext, values) -> np.ndarray:
    vals = np.asarray(values, dtype=np.complex128).ravel()
    if vals.size > ctx.slots:
        raise TooManySlots(f"{vals.size} values exceed the batch size {ctx.slots}")
    out = np.zeros(ctx.slots, dtype=np.complex128)
    out[: vals.size] = vals
    return out


def embed_inverse(ctx: CkksContext, values) -> np.ndarray:
    """Real coefficients ``m`` whose slots are ``values`` (before scaling)."""
    n = ctx.n
    emb = ctx.embedding
    full = np.tile(_slot_vector(ctx, values), ctx.replicas)
    spectrum = np.zeros(n, dtype=np.complex128)
    spectrum[emb.slot_index] = full
    spectrum[emb.conj_index] = full.conj()
    return (np.fft.fft(spectrum) * emb.twist.conj()).real / n


def embed(ctx: CkksContext, coeffs: np.ndarray) -> np.ndarray:
    """All ``N/2`` slot values of real coefficients ``coeffs``."""
    emb = ctx.embedding
    spectrum = ctx.n * np.fft.ifft(np.asarray(coeffs, dtype=np.float64) * emb.twist)
    return spectrum[emb.slot_index]


def _to_ring(ctx: CkksContext, coeffs: np.ndarray, level: int) -> RingElement:
    rounded = np.rint(coeffs)
    count = level + 1
    offset = ctx.special_count
    if np.max(np.abs(rounded), initial=0.0) < _INT64_SAFE:
        return from_signed(ctx.ring, rounded.astype(np.int64), count, offset)
    return from_bigints(ctx.ring, [int(c) for c in rounded], count, offset)


def encode(ctx: CkksContext, values, scale: float | None = None, level: int | None = None) -> Plaintext:
    """Encode up to ``B`` real (or complex) values.

    Args:
        ctx: Context.
        values: At most ``batch_size`` numbers, zero-padded.
        scale: Defaults to ``2**S``.
        level: Defaults to the top of the chain.

    Raises:
        TooManySlots: more values than the batch size.
    """
    scale = ctx.delta if scale is None else float(scale)
    level = ctx.max_level if level is None else level
    if not 0 <= level <= ctx.max_level:
        raise LevelMismatch(f"level {level} outside 0..{ctx.max_level}")
    coeffs = embed_inverse(ctx, values) * scale
    return Plaintext(ntt_forward(_to_ring(ctx, coeffs, level)), scale, ctx.slots)


def encode_constant(ctx: CkksContext, value: float, scale: float | None = None,
                    level: int | None = None) -> Plaintext:
    """A constant in every slot: the constant polynomial ``round(scale * value)``."""
    scale = ctx.delta if scale is None else float(scale)
    level = ctx.max_level if level is None else level
    coeffs = np.zeros(ctx.n)
    coeffs[0] = value * scale
    return Plaintext(ntt_forward(_to_ring(ctx, coeffs, level)), scale, ctx.slots)


def decode_poly(ctx: CkksContext, poly: RingElement, scale: float) -> np.ndarray:
    """Slot values of ``poly / scale``, averaged over replicas (complex)."""
    coeffs = crt_float(poly)
    slots = embed(ctx, coeffs) / scale
    return slots.reshape(ctx.replicas, ctx.slots).mean(axis=0)


def decode(ctx: CkksContext, pt: Plaintext) -> np.ndarray:
    """Real parts of the ``B`` slots."""
    return decode_poly(ctx, pt.poly, pt.scale).real
