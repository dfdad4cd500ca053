"""Exact arithmetic in ``Z_Q[X]/(X^N + 1)`` with an RNS modulus chain."""

from .element import (
    Domain,
    RingElement,
    apply_galois,
    crt_float,
    divide_round_low,
    drop_limb,
    from_bigints,
    from_signed,
    mul_integer,
    ntt_forward,
    ntt_inverse,
    ring_add,
    ring_mul,
    ring_mul_add,
    ring_neg,
    ring_sub,
    to_domain,
    truncate,
    zeros,
)
from .primes import ModulusChain, PrimeKind, PrimeModulus, build_chain, find_ntt_primes
from .rns import RnsRing
from .sampling import DEFAULT_SIGMA, sample_gaussian, sample_ternary, sample_uniform

__all__ = [
    "DEFAULT_SIGMA",
    "Domain",
    "ModulusChain",
    "PrimeKind",
    "PrimeModulus",
    "RingElement",
    "RnsRing",
    "apply_galois",
    "build_chain",
    "crt_float",
    "divide_round_low",
    "drop_limb",
    "find_ntt_primes",
    "from_bigints",
    "from_signed",
    "mul_integer",
    "ntt_forward",
    "ntt_inverse",
    "ring_add",
    "ring_mul",
    "ring_mul_add",
    "ring_neg",
    "ring_sub",
    "sample_gaussian",
    "sample_ternary",
    "sample_uniform",
    "to_domain",
    "truncate",
    "zeros",
]
