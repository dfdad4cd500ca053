"""NTT-friendly prime search and the RNS modulus chain."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from sympy import isprime

from ..errors import InvalidParams

MAX_PRIME_BITS = 61


class PrimeKind(str, enum.Enum):
    FIRST = "first"
    SCALING = "scaling"
    SPECIAL = "special"


@dataclass(frozen=True)
class PrimeModulus:
    value: int
    kind: PrimeKind

    @property
    def bit_size(self) -> int:
        return self.value.bit_length()


def find_ntt_primes(bits: int, count: int, ring_dim: int, exclude: Iterable[int] = ()) -> list[int]:
    """Return ``count`` primes ``q ≡ 1 (mod 2N)`` of exactly ``bits`` bits.

    Candidates are scanned downward from ``2**bits``, so the result is the
    deterministic list of largest such primes (closest to ``2**bits``).
    """
    if bits > MAX_PRIME_BITS:
        raise InvalidParams(f"primes above {MAX_PRIME_BITS} bits do not fit the word kernels")
    step = 2 * ring_dim
    skip = set(exclude)
    found: list[int] = []
    q = (1 << bits) - step + 1
    low = 1 << (bits - 1)
    while len(found) < count and q > low:
        if q not in skip and isprime(q):
            found.append(q)
        q -= step
    if len(found) < count:
        raise InvalidParams(
            f"only {len(found)} primes of {bits} bits are congruent to 1 mod {step}; need {count}"
        )
    return found


def find_ntt_primes_above(bits: int, count: int, ring_dim: int, exclude: Iterable[int] = ()) -> list[int]:
    """Return up to ``count`` primes ``q ≡ 1 (mod 2N)`` in ``(2**bits, 2**(bits+1))``, nearest first."""
    if bits + 1 > MAX_PRIME_BITS:
        return []
    step = 2 * ring_dim
    skip = set(exclude)
    found: list[int] = []
    q = ((1 << bits) // step) * step + 1
    if q <= 1 << bits:
        q += step
    high = 1 << (bits + 1)
    while len(found) < count and q < high:
        if q not in skip and isprime(q):
            found.append(q)
        q += step
    return found


def _scan_down(bits: int, count: int, ring_dim: int, skip: set[int]) -> list[int]:
    step = 2 * ring_dim
    found: list[int] = []
    q = (1 << bits) - step + 1
    low = 1 << (bits - 1)
    while len(found) < count and q > low:
        if q not in skip and isprime(q):
            found.append(q)
        q -= step
    return found


def scaling_primes(bits: int, count: int, ring_dim: int, exclude: Iterable[int] = ()) -> list[int]:
    """Up to ``count`` NTT-friendly primes whose bit size is within one of ``bits``.

    Preference order: ``bits``-bit primes scanning down from ``2**bits``,
    then ``bits + 1``-bit primes scanning up from ``2**bits``, then
    ``bits - 1``-bit primes scanning down.  The result is deterministic and
    may be shorter than ``count``.
    """
    skip = set(exclude)
    out = _scan_down(bits, count, ring_dim, skip)
    if len(out) < count:
        out += find_ntt_primes_above(bits, count - len(out), ring_dim, skip)
    if len(out) < count and bits > 2:
        out += _scan_down(bits - 1, count - len(out), ring_dim, skip)
    return out


def min_ntt_prime_bits(ring_dim: int) -> int:
    """Smallest bit size for which an NTT-friendly prime exists for this ``N``."""
    bits = (2 * ring_dim).bit_length()
    while True:
        try:
            find_ntt_primes(bits, 1, ring_dim)
            return bits
        except InvalidParams:
            bits += 1


def primitive_2n_root(q: int, ring_dim: int) -> int:
    """Smallest-generator primitive ``2N``-th root of unity modulo ``q``."""
    two_n = 2 * ring_dim
    if (q - 1) % two_n:
        raise InvalidParams(f"{q} is not congruent to 1 mod {two_n}")
    exp = (q - 1) // two_n
    for g in range(2, q):
        psi = pow(g, exp, q)
        if pow(psi, ring_dim, q) == q - 1:
            return psi
    raise InvalidParams(f"no primitive {two_n}-th root modulo {q}")


@dataclass(frozen=True)
class ModulusChain:
    """Ciphertext primes (index 0 survives every rescale) plus key-switching specials."""

    primes: tuple[PrimeModulus, ...]
    special: tuple[PrimeModulus, ...] = ()

    @property
    def values(self) -> list[int]:
        return [p.value for p in self.primes]

    @property
    def special_values(self) -> list[int]:
        return [p.value for p in self.special]

    @property
    def depth(self) -> int:
        return len(self.primes) - 1

    @property
    def total_log_q(self) -> int:
        return sum(p.bit_size for p in self.primes)

    @property
    def special_log_p(self) -> int:
        return sum(p.bit_size for p in self.special)

    def modulus(self, level: int) -> int:
        out = 1
        for p in self.primes[: level + 1]:
            out *= p.value
        return out


def build_chain(
    ring_dim: int,
    depth: int,
    scale_bits: int,
    first_bits: int,
    special_count: int = 0,
    special_bits: int = MAX_PRIME_BITS,
) -> ModulusChain:
    """Build ``first`` + ``depth`` scaling primes (+ specials), all distinct.

    Scaling primes are the NTT-friendly primes nearest ``2**scale_bits``
    (see :func:`scaling_primes`).  When fewer than ``depth`` exist within one
    bit (small scales at large ``N``, since ``q > 2N``), the remainder come
    from the smallest larger bit size that has them; the encoding scale
    stays ``2**scale_bits``.
    """
    first = find_ntt_primes(first_bits, 1, ring_dim)
    used = set(first)
    scaling = scaling_primes(scale_bits, depth, ring_dim, exclude=used)
    if len(scaling) < depth:
        scaling += _primes_from(max(scale_bits + 2, min_ntt_prime_bits(ring_dim)), depth - len(scaling),
                                ring_dim, used | set(scaling))
    used.update(scaling)
    special = find_ntt_primes(special_bits, special_count, ring_dim, exclude=used) if special_count else []
    return ModulusChain(
        primes=tuple([PrimeModulus(first[0], PrimeKind.FIRST)] + [PrimeModulus(q, PrimeKind.SCALING) for q in scaling]),
        special=tuple(PrimeModulus(p, PrimeKind.SPECIAL) for p in special),
    )


def _primes_from(bits: int, count: int, ring_dim: int, exclude: set[int]) -> list[int]:
    out: list[int] = []
    while len(out) < count:
        if bits > MAX_PRIME_BITS:
            raise InvalidParams(f"cannot find {count} NTT-friendly scaling primes for N={ring_dim}")
        try:
            out += find_ntt_primes(bits, count - len(out), ring_dim, exclude=exclude | set(out))
        except InvalidParams:
            bits += 1
    return out


def product(values: Sequence[int]) -> int:
    out = 1
    for v in values:
        out *= v
    return out
