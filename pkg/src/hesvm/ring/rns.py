"""Precomputed per-prime constants for an ordered RNS basis."""

from __future__ import annotations

import functools
from typing import Sequence

import numpy as np

from ..errors import InvalidParams
from .primes import primitive_2n_root

_U64 = np.uint64
_TWO64 = 1 << 64


def bit_reverse_permutation(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def shoup(values, q: int) -> np.ndarray:
    return np.array([(int(v) << 64) // q for v in values], dtype=_U64)


@functools.lru_cache(maxsize=64)
def _prime_tables(n: int, q: int):
    psi = primitive_2n_root(q, n)
    psi_inv = pow(psi, -1, q)
    rev = bit_reverse_permutation(n)
    pw = [1] * n
    ipw = [1] * n
    for i in range(1, n):
        pw[i] = pw[i - 1] * psi % q
        ipw[i] = ipw[i - 1] * psi_inv % q
    psi_rev = [pw[r] for r in rev]
    ipsi_rev = [ipw[r] for r in rev]
    n_inv = pow(n, -1, q)
    return dict(
        psi=psi,
        psi_rev=np.array(psi_rev, dtype=_U64),
        psi_rev_shoup=shoup(psi_rev, q),
        ipsi_rev=np.array(ipsi_rev, dtype=_U64),
        ipsi_rev_shoup=shoup(ipsi_rev, q),
        n_inv=n_inv,
        n_inv_shoup=(n_inv << 64) // q,
        qinv_neg=(-pow(q, -1, _TWO64)) % _TWO64,
        r2=pow(2, 128, q),
    )


class RnsRing:
    """The ring ``Z_q[X]/(X^N + 1)`` for every prime of an ordered basis.

    Holds the NTT tables (powers of a primitive ``2N``-th root in bit-reversed
    order, their inverses, ``N**-1``) and the Montgomery constants for each
    prime, stacked as ``(len(primes), N)`` arrays so contiguous sub-bases are
    plain row slices.  Immutable after construction.
    """

    def __init__(self, n: int, primes: Sequence[int]):
        if n < 2 or n & (n - 1):
            raise InvalidParams(f"ring dimension must be a power of two, got {n}")
        if len(set(primes)) != len(primes):
            raise InvalidParams("RNS primes must be distinct")
        if any(q >= 1 << 62 or q % (2 * n) != 1 for q in primes):
            raise InvalidParams("primes must be below 2**62 and congruent to 1 mod 2N")
        self.n = n
        self.primes = tuple(int(q) for q in primes)
        tabs = [_prime_tables(n, q) for q in self.primes]
        self.moduli = np.array(self.primes, dtype=_U64)
        self.psi = tuple(t["psi"] for t in tabs)
        self.psi_rev = np.stack([t["psi_rev"] for t in tabs])
        self.psi_rev_shoup = np.stack([t["psi_rev_shoup"] for t in tabs])
        self.ipsi_rev = np.stack([t["ipsi_rev"] for t in tabs])
        self.ipsi_rev_shoup = np.stack([t["ipsi_rev_shoup"] for t in tabs])
        self.n_inv = np.array([t["n_inv"] for t in tabs], dtype=_U64)
        self.n_inv_shoup = np.array([t["n_inv_shoup"] for t in tabs], dtype=_U64)
        self.qinv_neg = np.array([t["qinv_neg"] for t in tabs], dtype=_U64)
        self.r2 = np.array([t["r2"] for t in tabs], dtype=_U64)
        self.bit_reverse = bit_reverse_permutation(n)
        for arr in (self.moduli, self.psi_rev, self.psi_rev_shoup, self.ipsi_rev,
                    self.ipsi_rev_shoup, self.n_inv, self.n_inv_shoup, self.qinv_neg, self.r2):
            arr.setflags(write=False)
        self._galois_cache: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.primes)

    def __repr__(self) -> str:
        return f"RnsRing(n={self.n}, primes={len(self.primes)})"

    def galois_permutation(self, g: int) -> np.ndarray:
        """Index map realising ``a(X) -> a(X**g)`` on bit-reversed NTT vectors.

        Slot ``i`` of the forward transform holds ``a(psi**(2*rev(i) + 1))``;
        the automorphism sends that evaluation to ``a(psi**((2*rev(i) + 1) * g))``.
        """
        g %= 2 * self.n
        if g % 2 == 0:
            raise InvalidParams("Galois element must be odd")
        perm = self._galois_cache.get(g)
        if perm is None:
            rev = self.bit_reverse
            exps = (2 * rev + 1) * g % (2 * self.n)
            perm = rev[(exps - 1) // 2]
            perm.setflags(write=False)
            self._galois_cache[g] = perm
        return perm
