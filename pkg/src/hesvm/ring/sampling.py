"""Samplers for secrets, errors and masks.

Each sampler is a pure function of its arguments and the supplied
``numpy.random.Generator``; callers own seeding.  Signed samplers return the
integer vector alongside the ring element so keys can keep the small form.
"""

from __future__ import annotations

import numpy as np

from .element import Domain, RingElement, from_signed
from .rns import RnsRing

DEFAULT_SIGMA = 3.2
TAIL_CUT = 6.0


def ternary_coeffs(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(-1, 2, size=n, dtype=np.int64)


def gaussian_coeffs(n: int, rng: np.random.Generator, sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Rounded normal samples, rejection-cut at ``6 * sigma``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    bound = TAIL_CUT * sigma
    out = np.rint(rng.normal(0.0, sigma, size=n))
    bad = np.abs(out) > bound
    while bad.any():
        out[bad] = np.rint(rng.normal(0.0, sigma, size=int(bad.sum())))
        bad = np.abs(out) > bound
    return out.astype(np.int64)


def sample_ternary(ring: RnsRing, rng: np.random.Generator, count: int | None = None,
                   offset: int = 0) -> RingElement:
    return from_signed(ring, ternary_coeffs(ring.n, rng), count, offset)


def sample_gaussian(ring: RnsRing, rng: np.random.Generator, sigma: float = DEFAULT_SIGMA,
                    count: int | None = None, offset: int = 0) -> RingElement:
    return from_signed(ring, gaussian_coeffs(ring.n, rng, sigma), count, offset)


def sample_uniform(ring: RnsRing, rng: np.random.Generator, count: int | None = None,
                   offset: int = 0, domain: Domain = Domain.COEFFICIENT) -> RingElement:
    """Independent uniform residues per limb.

    A uniform element is uniform in either representation, so it can be
    produced directly in the NTT domain without a transform.
    """
    count = len(ring) - offset if count is None else count
    primes = ring.primes[offset:offset + count]
    limbs = np.empty((count, ring.n), dtype=np.uint64)
    for i, q in enumerate(primes):
        limbs[i] = rng.integers(0, q, size=ring.n, dtype=np.uint64)
    return RingElement(ring, limbs, domain, offset)
