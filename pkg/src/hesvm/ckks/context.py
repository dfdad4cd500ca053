"""The validated parameter set with its modulus chain and precomputed tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..ring import ModulusChain, RnsRing, build_chain
from ..ring.primes import MAX_PRIME_BITS
from .params import CkksParams

# Key-switching noise is divided by P; 20 spare bits above the largest digit
# keep it well under the rounding noise of a rescale.
KEYSWITCH_HEADROOM_BITS = 20


@dataclass(frozen=True)
class EmbeddingTables:
    """Index and twist tables for the canonical embedding.

    Slot ``j`` is the evaluation at ``zeta**(5**j mod 2N)`` with
    ``zeta = exp(i*pi/N)``.  Odd exponent ``e`` lives at FFT index ``(e-1)/2``.
    """

    slot_index: np.ndarray
    conj_index: np.ndarray
    twist: np.ndarray

    @classmethod
    def build(cls, n: int) -> EmbeddingTables:
        half = n // 2
        exps = np.empty(half, dtype=np.int64)
        e = 1
        for j in range(half):
            exps[j] = e
            e = e * 5 % (2 * n)
        slot_index = (exps - 1) // 2
        conj_index = (2 * n - exps - 1) // 2
        twist = np.exp(1j * np.pi * np.arange(n) / n)
        for arr in (slot_index, conj_index, twist):
            arr.setflags(write=False)
        return cls(slot_index, conj_index, twist)


@dataclass(frozen=True)
class CkksContext:
    """Immutable bundle shared by every CKKS operation.

    The RNS basis of ``ring`` is ordered ``[specials..., q0, q1, ..., qD]``:
    a ciphertext at level ``l`` uses rows ``k .. k+l`` (``k`` specials) and
    key-switching works over rows ``0 .. k+l``.  Both are contiguous slices.
    """

    params: CkksParams
    chain: ModulusChain
    ring: RnsRing
    embedding: EmbeddingTables = field(repr=False)

    @property
    def n(self) -> int:
        return self.params.ring_dim

    @property
    def special_count(self) -> int:
        return len(self.chain.special)

    @property
    def max_level(self) -> int:
        return self.chain.depth

    @property
    def delta(self) -> float:
        return float(2 ** self.params.scaling_bits)

    @property
    def slots(self) -> int:
        return self.params.batch_size

    @property
    def replicas(self) -> int:
        return self.n // 2 // self.slots

    @property
    def special_product(self) -> int:
        out = 1
        for p in self.chain.special_values:
            out *= p
        return out

    def q_at(self, level: int) -> int:
        """The prime removed when rescaling from ``level``."""
        return self.chain.primes[level].value

    @property
    def total_bits(self) -> int:
        return self.chain.total_log_q + self.chain.special_log_p


def special_prime_count(max_prime_bits: int) -> int:
    return math.ceil((max_prime_bits + KEYSWITCH_HEADROOM_BITS) / MAX_PRIME_BITS)


def gen_context(params: CkksParams) -> CkksContext:
    """Validate ``params``, build the chain and check the security budget.

    Raises:
        InvalidParams: structural problems (non power-of-two sizes, ``M <= S``...).
        SecurityBudgetExceeded: ``log2(QP)`` above the table entry for ``(N, L)``.
    """
    params.validate()
    probe = max(params.first_mod_bits, params.scaling_bits)
    k = special_prime_count(probe)
    # fail fast on the budget before searching for primes
    params.check_security(params.nominal_log_q + k * MAX_PRIME_BITS)
    chain = build_chain(params.ring_dim, params.mult_depth, params.scaling_bits,
                        params.first_mod_bits, special_count=k)
    params.check_security(chain.total_log_q + chain.special_log_p)
    ring = RnsRing(params.ring_dim, chain.special_values + chain.values)
    return CkksContext(params, chain, ring, EmbeddingTables.build(params.ring_dim))
