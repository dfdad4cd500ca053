"""Keys, public-key encryption, decryption and hybrid key switching."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..errors import LevelMismatch, NoRelinKey, NoRotationKey
from ..ring import (
    Domain,
    RingElement,
    apply_galois,
    divide_round_low,
    from_signed,
    mul_integer,
    ntt_forward,
    ntt_inverse,
    ring_add,
    ring_mul,
    ring_mul_add,
    ring_neg,
    sample_gaussian,
    sample_ternary,
    sample_uniform,
    truncate,
    zeros,
)
from ..ring import _kernels as K
from ..ring.sampling import ternary_coeffs
from .context import CkksContext
from .encoding import Plaintext


@dataclass(frozen=True)
class Ciphertext:
    """``parts[0] + parts[1]*s (+ parts[2]*s**2)`` decrypts to ``scale * m``.

    All parts are NTT-domain ring elements over the same ciphertext primes.
    """

    parts: tuple[RingElement, ...]
    scale: float

    @property
    def level(self) -> int:
        return self.parts[0].level

    @property
    def degree(self) -> int:
        return len(self.parts) - 1

    def __post_init__(self):
        first = self.parts[0]
        for p in self.parts[1:]:
            if p.count != first.count or p.offset != first.offset or p.domain is not first.domain:
                raise LevelMismatch("ciphertext parts disagree on level or domain")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class KeySwitchKey:
    """One key per RNS digit ``i``: ``(-a_i*s + e_i + [i == j]*P*s', a_i)`` over ``Q*P``.

    ``b`` and ``a`` have shape ``(digits, k + D + 1, N)`` in the NTT domain.
    """

    b: np.ndarray
    a: np.ndarray

    @property
    def digits(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class SecretKey:
    coeffs: np.ndarray
    ntt: RingElement


@dataclass(frozen=True)
class KeySet:
    """Secret, public, relinearization and rotation keys from one secret.

    ``secret`` is ``None`` in the evaluation-only copy handed to a data processor.
    """

    public: tuple[RingElement, RingElement]
    secret: SecretKey | None = None
    relin: KeySwitchKey | None = None
    rotations: dict[int, KeySwitchKey] = field(default_factory=dict)

    def public_only(self) -> KeySet:
        return KeySet(self.public, None, self.relin, dict(self.rotations))

    def rotation_key(self, step: int) -> KeySwitchKey:
        try:
            return self.rotations[step]
        except KeyError:
            raise NoRotationKey(f"no rotation key for step {step}") from None


def normalize_step(ctx: CkksContext, step: int) -> int:
    return int(step) % ctx.slots


def galois_element(ctx: CkksContext, step: int) -> int:
    """``5**step mod 2N``: the automorphism rotating slots left by ``step``."""
    return pow(5, normalize_step(ctx, step), 2 * ctx.n)


def default_rotation_steps(ctx: CkksContext) -> list[int]:
    steps = []
    k = 1
    while k <= ctx.slots // 2:
        steps.append(k)
        k *= 2
    return steps


def _full_gaussian(ctx: CkksContext, rng: np.random.Generator) -> RingElement:
    return ntt_forward(sample_gaussian(ctx.ring, rng, ctx.params.sigma))


def _gen_switch_key(ctx: CkksContext, secret: SecretKey, target: RingElement,
                    rng: np.random.Generator) -> KeySwitchKey:
    """Key switching ``target`` (NTT, full basis) to ``secret``."""
    k = ctx.special_count
    digits = ctx.max_level + 1
    rows = len(ctx.ring)
    b = np.empty((digits, rows, ctx.n), dtype=np.uint64)
    a = np.empty_like(b)
    p_total = ctx.special_product
    for i in range(digits):
        ai = sample_uniform(ctx.ring, rng, domain=Domain.NTT)
        bi = ring_add(ring_neg(ring_mul(ai, secret.ntt)), _full_gaussian(ctx, rng))
        row = k + i
        gadget = mul_integer(RingElement(ctx.ring, target.limbs[row:row + 1].copy(), Domain.NTT, row), p_total)
        limbs = bi.limbs.copy()
        limbs[row] = K.add_mod(limbs[row:row + 1], gadget.limbs, ctx.ring.moduli[row:row + 1])[0]
        b[i] = limbs
        a[i] = ai.limbs
    b.setflags(write=False)
    a.setflags(write=False)
    return KeySwitchKey(b, a)


def keygen(ctx: CkksContext, rng: np.random.Generator, rotations: Iterable[int] | None = None,
           default_rotations: bool = True, relin: bool = True) -> KeySet:
    """Generate every key from a fresh ternary secret.

    Args:
        ctx: Context.
        rng: Source of all randomness.
        rotations: Extra rotation steps (any sign); reduced modulo the batch size.
        default_rotations: Include the power-of-two steps up to ``B/2``.
        relin: Generate the relinearization key.
    """
    coeffs = ternary_coeffs(ctx.n, rng)
    s = ntt_forward(from_signed(ctx.ring, coeffs))
    secret = SecretKey(coeffs, s)
    a = sample_uniform(ctx.ring, rng, domain=Domain.NTT)
    b = ring_add(ring_neg(ring_mul(a, s)), _full_gaussian(ctx, rng))
    relin_key = _gen_switch_key(ctx, secret, ring_mul(s, s), rng) if relin else None
    steps = set(default_rotation_steps(ctx) if default_rotations else [])
    steps.update(normalize_step(ctx, r) for r in (rotations or ()))
    steps.discard(0)
    rot = {st: _gen_switch_key(ctx, secret, apply_galois(s, galois_element(ctx, st)), rng)
           for st in sorted(steps)}
    return KeySet((b, a), secret, relin_key, rot)


def add_rotation_keys(ctx: CkksContext, keys: KeySet, steps: Iterable[int],
                      rng: np.random.Generator) -> KeySet:
    """Extend the rotation map on demand (needs the secret)."""
    if keys.secret is None:
        raise NoRotationKey("rotation keys can only be added by the secret-key holder")
    rot = dict(keys.rotations)
    s = keys.secret.ntt
    for st in sorted({normalize_step(ctx, x) for x in steps} - set(rot) - {0}):
        rot[st] = _gen_switch_key(ctx, keys.secret, apply_galois(s, galois_element(ctx, st)), rng)
    return KeySet(keys.public, keys.secret, keys.relin, rot)


def secret_at(ctx: CkksContext, sk: SecretKey, count: int) -> RingElement:
    k = ctx.special_count
    return RingElement(ctx.ring, sk.ntt.limbs[k:k + count], Domain.NTT, k)


def encrypt(ctx: CkksContext, pt: Plaintext, public: tuple[RingElement, RingElement],
            rng: np.random.Generator) -> Ciphertext:
    """``(v*b + e0, v*a + e1)`` over ``Q*P``, divided by ``P``, plus the message.

    Working over the extended basis and rounding away ``P`` leaves only the
    rounding noise, far below the raw ``v*e + e0 + e1*s`` term.
    """
    b, a = public
    k = ctx.special_count
    v = ntt_forward(sample_ternary(ctx.ring, rng))
    c0 = ring_add(ring_mul(v, b), _full_gaussian(ctx, rng))
    c1 = ring_add(ring_mul(v, a), _full_gaussian(ctx, rng))
    c0 = divide_round_low(c0, k)
    c1 = divide_round_low(c1, k)
    count = pt.poly.count
    if count != c0.count:
        c0, c1 = truncate(c0, count), truncate(c1, count)
    return Ciphertext((ring_add(c0, pt.poly), c1), pt.scale)


def decrypt(ctx: CkksContext, ct: Ciphertext, sk: SecretKey) -> Plaintext:
    """``sum_i parts[i] * s**i`` at the ciphertext's level."""
    s = secret_at(ctx, sk, ct.parts[0].count)
    acc = ct.parts[-1]
    for part in reversed(ct.parts[:-1]):
        acc = ring_add(ring_mul(acc, s), part)
    return Plaintext(acc, ct.scale, ctx.slots)


def key_switch(ctx: CkksContext, c: RingElement, key: KeySwitchKey) -> tuple[RingElement, RingElement]:
    """``(d0, d1)`` with ``d0 + d1*s ~= c*s'`` for the key's source secret ``s'``.

    Each RNS digit ``[c]_{q_i}`` is lifted exactly into ``Q_l * P``, multiplied
    with key ``i`` and accumulated; the sum is then rounded down by ``P``.
    """
    k = ctx.special_count
    count = c.count
    rows = k + count
    ring = ctx.ring
    moduli = ring.moduli[:rows]
    coeff = ntt_inverse(c).limbs
    acc0 = zeros(ring, rows, 0, Domain.NTT)
    acc1 = zeros(ring, rows, 0, Domain.NTT)
    for i in range(count):
        ext = RingElement(ring, K.reduce_rows(coeff[i], moduli), Domain.COEFFICIENT, 0)
        ext = ntt_forward(ext)
        ring_mul_add(acc0, ext, RingElement(ring, key.b[i, :rows], Domain.NTT, 0))
        ring_mul_add(acc1, ext, RingElement(ring, key.a[i, :rows], Domain.NTT, 0))
    return divide_round_low(acc0, k), divide_round_low(acc1, k)


def relinearize(ctx: CkksContext, ct: Ciphertext, keys: KeySet) -> Ciphertext:
    if ct.degree == 1:
        return ct
    if keys.relin is None:
        raise NoRelinKey("relinearization key not generated")
    d0, d1 = key_switch(ctx, ct.parts[2], keys.relin)
    return Ciphertext((ring_add(ct.parts[0], d0), ring_add(ct.parts[1], d1)), ct.scale)
