"""Ring elements in RNS form and the exact arithmetic on them."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, LevelMismatch
from . import _kernels as K
from .rns import RnsRing


class Domain(str, enum.Enum):
    COEFFICIENT = "coefficient"
    NTT = "ntt"


@dataclass(frozen=True, eq=False)
class RingElement:
    """A polynomial held as residues modulo ``ring.primes[offset:offset + count]``.

    ``limbs`` has shape ``(count, N)`` with unsigned canonical residues.  The
    last row is the top prime; rescaling removes it.
    """

    ring: RnsRing
    limbs: np.ndarray
    domain: Domain
    offset: int = 0

    @property
    def count(self) -> int:
        return self.limbs.shape[0]

    @property
    def level(self) -> int:
        return self.count - 1

    @property
    def basis(self) -> slice:
        return slice(self.offset, self.offset + self.count)

    @property
    def moduli(self) -> np.ndarray:
        return self.ring.moduli[self.basis]

    @property
    def primes(self) -> tuple[int, ...]:
        return self.ring.primes[self.basis]

    def replace(self, limbs: np.ndarray, domain: Domain | None = None, offset: int | None = None) -> RingElement:
        return RingElement(self.ring, limbs, self.domain if domain is None else domain,
                           self.offset if offset is None else offset)

    def copy(self) -> RingElement:
        return self.replace(self.limbs.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RingElement):
            return NotImplemented
        return (self.ring is other.ring and self.offset == other.offset
                and self.domain == other.domain and np.array_equal(self.limbs, other.limbs))

    __hash__ = None  # type: ignore[assignment]


def zeros(ring: RnsRing, count: int | None = None, offset: int = 0,
          domain: Domain = Domain.COEFFICIENT) -> RingElement:
    count = len(ring) - offset if count is None else count
    return RingElement(ring, np.zeros((count, ring.n), dtype=np.uint64), domain, offset)


def from_signed(ring: RnsRing, coeffs, count: int | None = None, offset: int = 0) -> RingElement:
    """Coefficient-domain element from signed integer coefficients (|c| < 2**63)."""
    count = len(ring) - offset if count is None else count
    arr = np.ascontiguousarray(coeffs, dtype=np.int64)
    if arr.shape != (ring.n,):
        raise ValueError(f"expected {ring.n} coefficients, got shape {arr.shape}")
    limbs = K.signed_to_residues(arr, ring.moduli[offset:offset + count])
    return RingElement(ring, limbs, Domain.COEFFICIENT, offset)


def from_bigints(ring: RnsRing, coeffs, count: int | None = None, offset: int = 0) -> RingElement:
    """Coefficient-domain element from arbitrary Python integers."""
    count = len(ring) - offset if count is None else count
    primes = ring.primes[offset:offset + count]
    limbs = np.array([[int(c) % q for c in coeffs] for q in primes], dtype=np.uint64)
    return RingElement(ring, limbs, Domain.COEFFICIENT, offset)


def _tables(e: RingElement):
    s = e.basis
    r = e.ring
    return s, r


def ntt_forward(e: RingElement) -> RingElement:
    if e.domain is not Domain.COEFFICIENT:
        raise DomainError("element is already in the NTT domain")
    s, r = _tables(e)
    out = e.limbs.copy()
    K.ntt_forward_inplace(out, r.psi_rev[s], r.psi_rev_shoup[s], r.moduli[s])
    return e.replace(out, Domain.NTT)


def ntt_inverse(e: RingElement) -> RingElement:
    if e.domain is not Domain.NTT:
        raise DomainError("element is already in the coefficient domain")
    s, r = _tables(e)
    out = e.limbs.copy()
    K.ntt_inverse_inplace(out, r.ipsi_rev[s], r.ipsi_rev_shoup[s], r.moduli[s], r.n_inv[s], r.n_inv_shoup[s])
    return e.replace(out, Domain.COEFFICIENT)


def to_domain(e: RingElement, domain: Domain) -> RingElement:
    if e.domain is domain:
        return e
    return ntt_forward(e) if domain is Domain.NTT else ntt_inverse(e)


def _check_pair(a: RingElement, b: RingElement, same_domain: bool = True) -> None:
    if a.ring is not b.ring:
        raise LevelMismatch("elements belong to different rings")
    if a.offset != b.offset or a.count != b.count:
        raise LevelMismatch(f"level mismatch: {a.level} vs {b.level}")
    if same_domain and a.domain is not b.domain:
        raise DomainError(f"domain mismatch: {a.domain.value} vs {b.domain.value}")


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    _check_pair(a, b)
    return a.replace(K.add_mod(a.limbs, b.limbs, a.moduli))


def ring_sub(a: RingElement, b: RingElement) -> RingElement:
    _check_pair(a, b)
    return a.replace(K.sub_mod(a.limbs, b.limbs, a.moduli))


def ring_neg(a: RingElement) -> RingElement:
    return a.replace(K.neg_mod(a.limbs, a.moduli))


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    """Negacyclic product.  Coefficient inputs give a coefficient result;
    if either side is already in the NTT domain the result stays there."""
    _check_pair(a, b, same_domain=False)
    back = a.domain is Domain.COEFFICIENT and b.domain is Domain.COEFFICIENT
    fa = to_domain(a, Domain.NTT)
    fb = to_domain(b, Domain.NTT)
    s, r = _tables(fa)
    prod = fa.replace(K.mul_mod_vec(fa.limbs, fb.limbs, r.moduli[s], r.qinv_neg[s], r.r2[s]))
    return ntt_inverse(prod) if back else prod


def ring_mul_add(acc: RingElement, a: RingElement, b: RingElement) -> None:
    """``acc += a * b`` in place; all three in the NTT domain."""
    _check_pair(acc, a)
    _check_pair(a, b)
    s, r = _tables(a)
    K.mul_add_mod_vec(acc.limbs, a.limbs, b.limbs, r.moduli[s], r.qinv_neg[s], r.r2[s])


def mul_integer(a: RingElement, k: int) -> RingElement:
    """Multiply by a (possibly negative, arbitrarily large) integer constant."""
    moduli = a.primes
    scal = [int(k) % q for q in moduli]
    sh = np.array([(w << 64) // q for w, q in zip(scal, moduli)], dtype=np.uint64)
    return a.replace(K.mul_scalar_vec(a.limbs, np.array(scal, dtype=np.uint64), sh, a.moduli))


def truncate(a: RingElement, count: int) -> RingElement:
    """Keep the lowest ``count`` limbs (modulus reduction, values unchanged)."""
    if count > a.count or count < 1:
        raise LevelMismatch(f"cannot truncate {a.count} limbs to {count}")
    return a.replace(np.ascontiguousarray(a.limbs[:count]))


def apply_galois(a: RingElement, g: int) -> RingElement:
    """``a(X) -> a(X**g)``; works in either domain, result in the input domain."""
    f = to_domain(a, Domain.NTT)
    out = f.replace(K.permute_rows(f.limbs, a.ring.galois_permutation(g)))
    return to_domain(out, a.domain)


def _inverse_table(primes) -> np.ndarray:
    k = len(primes)
    tab = np.zeros((k, max(k, 1)), dtype=np.uint64)
    for i in range(k):
        for j in range(i):
            tab[i, j] = pow(primes[j], -1, primes[i])
    return tab


def _centered_residues(drop: np.ndarray, drop_primes, target: RnsRing, tsl: slice) -> np.ndarray:
    """Residues of the centred value of ``drop`` (coefficient rows) in each target modulus."""
    drop_moduli = np.array(drop_primes, dtype=np.uint64)
    k = len(drop_primes)
    if k == 1:
        digits = drop
    else:
        qinv = np.array([(-pow(q, -1, 1 << 64)) % (1 << 64) for q in drop_primes], dtype=np.uint64)
        r2 = np.array([pow(2, 128, q) for q in drop_primes], dtype=np.uint64)
        digits = K.mixed_radix_digits(drop, drop_moduli, _inverse_table(drop_primes), qinv, r2)
    tprimes = target.primes[tsl]
    weights = np.zeros((len(tprimes), k), dtype=np.uint64)
    whole = np.zeros(len(tprimes), dtype=np.uint64)
    for t, q in enumerate(tprimes):
        w = 1
        for i, p in enumerate(drop_primes):
            weights[t, i] = w % q
            w *= p
        whole[t] = w % q
    return K.crt_centered(digits, drop_moduli, weights, whole, target.moduli[tsl],
                          target.qinv_neg[tsl], target.r2[tsl])


def _divide_by(keep: RingElement, residues: np.ndarray, divisor: int) -> RingElement:
    primes = keep.primes
    inv = [pow(divisor % q, -1, q) for q in primes]
    inv_sh = np.array([(w << 64) // q for w, q in zip(inv, primes)], dtype=np.uint64)
    out = K.divide_round_by_last(keep.limbs, residues, np.array(inv, dtype=np.uint64), inv_sh, keep.moduli)
    return keep.replace(out)


def drop_limb(a: RingElement) -> RingElement:
    """Divide by the top prime and round: the ring step of rescaling.

    Exact RNS base conversion: the top limb's centred residue ``r`` is removed
    from every other limb, then each is multiplied by ``q_top**-1``.  Since
    ``q_top`` is odd, ``|r| < q_top / 2`` and the quotient is the nearest integer.
    """
    if a.count < 2:
        raise LevelMismatch("cannot drop the last remaining limb")
    q_top = a.primes[-1]
    top = RingElement(a.ring, a.limbs[-1:].copy(), a.domain, a.offset + a.count - 1)
    top_c = to_domain(top, Domain.COEFFICIENT).limbs
    keep = truncate(a, a.count - 1)
    r = _centered_residues(top_c, (q_top,), a.ring, keep.basis)
    if a.domain is Domain.NTT:
        r = ntt_forward(keep.replace(r, Domain.COEFFICIENT)).limbs
    return _divide_by(keep, r, q_top)


def divide_round_low(a: RingElement, k: int) -> RingElement:
    """Divide by the product of the lowest ``k`` limbs' primes and round.

    Used to leave the extended key-switching basis (the special primes sit in
    front of the ciphertext primes).
    """
    if k < 1 or k >= a.count:
        raise LevelMismatch(f"cannot divide out {k} of {a.count} limbs")
    drop_primes = a.primes[:k]
    low = RingElement(a.ring, a.limbs[:k].copy(), a.domain, a.offset)
    low_c = to_domain(low, Domain.COEFFICIENT).limbs
    keep = RingElement(a.ring, np.ascontiguousarray(a.limbs[k:]), a.domain, a.offset + k)
    r = _centered_residues(low_c, drop_primes, a.ring, keep.basis)
    if a.domain is Domain.NTT:
        r = ntt_forward(keep.replace(r, Domain.COEFFICIENT)).limbs
    p = 1
    for q in drop_primes:
        p *= q
    return _divide_by(keep, r, p)


def crt_float(a: RingElement) -> np.ndarray:
    """Centred integer value of each coefficient as float64.

    Garner mixed-radix digits are exact; the final weighted sum is evaluated
    in floating point, separately for ``X`` and ``Q - X`` so the smaller of the
    two (the centred magnitude) never suffers cancellation.
    """
    c = to_domain(a, Domain.COEFFICIENT)
    primes = c.primes
    s = c.basis
    r = c.ring
    inv = _inverse_table(primes)
    pos = K.mixed_radix_digits(c.limbs, r.moduli[s], inv, r.qinv_neg[s], r.r2[s])
    neg = K.mixed_radix_digits(K.neg_mod(c.limbs, r.moduli[s]), r.moduli[s], inv, r.qinv_neg[s], r.r2[s])
    weights = np.empty(len(primes))
    w = 1.0
    for i, q in enumerate(primes):
        weights[i] = w
        w *= float(q)
    total_half = w / 2.0
    xp = weights @ pos.astype(np.float64)
    xn = weights @ neg.astype(np.float64)
    return np.where(xp <= total_half, xp, -xn)
