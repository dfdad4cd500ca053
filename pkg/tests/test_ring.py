from math import isqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hesvm.errors import DomainError, InvalidParams, LevelMismatch
from hesvm.ring import (
    Domain,
    RingElement,
    RnsRing,
    apply_galois,
    build_chain,
    crt_float,
    divide_round_low,
    drop_limb,
    find_ntt_primes,
    from_bigints,
    from_signed,
    mul_integer,
    ntt_forward,
    ntt_inverse,
    ring_add,
    ring_mul,
    ring_neg,
    ring_sub,
    sample_gaussian,
    sample_ternary,
    sample_uniform,
    zeros,
)
from hesvm.ring.primes import PrimeKind, find_ntt_primes_above, scaling_primes

from oracles import bitrev, evaluate_poly_mod, reconstruct, round_half_away, schoolbook_negacyclic

SMALL_PRIMES = {4: [97, 113, 193], 8: [257, 97, 113], 16: [97, 193, 257], 32: [193, 257, 449]}


def trial_prime(n):
    return n > 1 and all(n % d for d in range(2, isqrt(n) + 1))


def ring_for(n, count=1):
    return RnsRing(n, SMALL_PRIMES[n][:count])


def rand_element(ring, rng, count=None):
    return sample_uniform(ring, rng, count)


class TestPrimes:
    @pytest.mark.parametrize("bits,n", [(30, 16384), (60, 16384), (40, 65536), (61, 1024)])
    def test_ntt_friendly(self, bits, n):
        primes = find_ntt_primes(bits, 3, n)
        assert len(set(primes)) == 3
        for q in primes:
            assert q % (2 * n) == 1
            assert q.bit_length() == bits
        assert primes == sorted(primes, reverse=True)

    def test_deterministic(self):
        assert find_ntt_primes(30, 4, 8192) == find_ntt_primes(30, 4, 8192)

    def test_chain_layout(self):
        chain = build_chain(16384, depth=3, scale_bits=30, first_bits=60, special_count=2)
        assert chain.primes[0].kind is PrimeKind.FIRST and chain.primes[0].bit_size == 60
        assert all(p.kind is PrimeKind.SCALING and abs(p.bit_size - 30) <= 1 for p in chain.primes[1:])
        assert len(chain.primes) == 4
        assert chain.total_log_q == 60 + 3 * 30
        values = chain.values + chain.special_values
        assert len(set(values)) == len(values)

    def test_tiny_scale_falls_back(self):
        chain = build_chain(16384, depth=1, scale_bits=10, first_bits=60)
        assert chain.primes[1].value % (2 * 16384) == 1

    def test_too_many_bits(self):
        with pytest.raises(InvalidParams):
            find_ntt_primes(62, 1, 1024)

    def test_primes_above_scan_up(self):
        primes = find_ntt_primes_above(20, 3, 1024)
        assert primes == sorted(primes)
        assert all(q.bit_length() == 21 and q % 2048 == 1 and trial_prime(q) for q in primes)
        # The first one is the smallest such prime above 2**20.
        assert all(not trial_prime(q) for q in range((1 << 20) + 1, primes[0], 2048))

    def test_scaling_tiers(self):
        # Only six NTT-friendly primes lie within one bit of 2**20 at N = 16384.
        primes = scaling_primes(20, 8, 16384)
        assert len(primes) == 6 and len(set(primes)) == 6
        assert all(abs(q.bit_length() - 20) <= 1 for q in primes)
        assert primes[0].bit_length() == 20

    def test_scaling_tiers_may_run_short(self):
        # No prime within one bit of 2**10 is 1 mod 2N at N = 16384.
        assert scaling_primes(10, 2, 16384) == []

    def test_deep_chain_at_small_scale(self):
        chain = build_chain(16384, depth=7, scale_bits=20, first_bits=60)
        values = [p.value for p in chain.primes[1:]]
        assert len(values) == 7 and len(set(values)) == 7
        assert all(q % (2 * 16384) == 1 for q in values)


class TestNtt:
    def test_constant_has_flat_spectrum(self):
        ring = ring_for(16, 3)
        c = from_signed(ring, [7] + [0] * 15)
        spec = ntt_forward(c)
        assert np.all(spec.limbs == 7)

    @pytest.mark.parametrize("n", [4, 8, 16, 32])
    def test_round_trip(self, n):
        rng = np.random.default_rng(n)
        ring = ring_for(n, 3)
        a = rand_element(ring, rng)
        assert ntt_inverse(ntt_forward(a)) == a

    def test_zero_spectrum(self):
        ring = ring_for(8)
        z = zeros(ring, domain=Domain.NTT)
        assert np.all(ntt_inverse(z).limbs == 0)

    def test_spectrum_of_x_inverts_to_x(self):
        ring = RnsRing(4, [97])
        psi = ring.psi[0]
        # direct evaluation of p(X) = X at the odd powers, bit-reversed order
        spectrum = [pow(psi, 2 * bitrev(i, 2) + 1, 97) for i in range(4)]
        elem = RingElement(ring, np.array([spectrum], dtype=np.uint64), Domain.NTT)
        assert ntt_inverse(elem).limbs.tolist() == [[0, 1, 0, 0]]

    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_forward_matches_direct_evaluation(self, n):
        rng = np.random.default_rng(1)
        ring = ring_for(n)
        q = ring.primes[0]
        a = rand_element(ring, rng)
        coeffs = [int(c) for c in a.limbs[0]]
        bits = n.bit_length() - 1
        expect = [evaluate_poly_mod(coeffs, pow(ring.psi[0], 2 * bitrev(i, bits) + 1, q), q) for i in range(n)]
        assert ntt_forward(a).limbs[0].tolist() == expect

    def test_domain_errors(self):
        ring = ring_for(8)
        a = zeros(ring)
        with pytest.raises(DomainError):
            ntt_inverse(a)
        with pytest.raises(DomainError):
            ntt_forward(ntt_forward(a))

    def test_60_bit_round_trip(self):
        rng = np.random.default_rng(3)
        ring = RnsRing(1024, find_ntt_primes(60, 2, 1024) + find_ntt_primes(61, 1, 1024))
        a = rand_element(ring, rng)
        assert ntt_inverse(ntt_forward(a)) == a


class TestRingMul:
    def test_identity(self):
        rng = np.random.default_rng(0)
        ring = ring_for(8, 2)
        a = rand_element(ring, rng)
        one = from_signed(ring, [1] + [0] * 7)
        assert ring_mul(a, one) == a

    def test_negacyclic_wrap(self):
        ring = ring_for(8, 3)
        x_top = from_signed(ring, [0] * 7 + [1])
        x = from_signed(ring, [0, 1] + [0] * 6)
        assert ring_mul(x_top, x) == from_signed(ring, [-1] + [0] * 7)

    def test_schoolbook_n8_q257(self):
        rng = np.random.default_rng(5)
        ring = RnsRing(8, [257])
        for _ in range(20):
            a, b = rand_element(ring, rng), rand_element(ring, rng)
            expect = schoolbook_negacyclic(a.limbs[0].tolist(), b.limbs[0].tolist(), 257)
            assert ring_mul(a, b).limbs[0].tolist() == expect

    def test_ntt_domain_results_stay_in_ntt(self):
        rng = np.random.default_rng(6)
        ring = ring_for(8, 2)
        a, b = rand_element(ring, rng), rand_element(ring, rng)
        prod = ring_mul(ntt_forward(a), b)
        assert prod.domain is Domain.NTT
        assert ntt_inverse(prod) == ring_mul(a, b)

    def test_level_mismatch(self):
        ring = ring_for(8, 3)
        with pytest.raises(LevelMismatch):
            ring_mul(zeros(ring, 3), zeros(ring, 2))
        with pytest.raises(LevelMismatch):
            ring_add(zeros(ring, 3), zeros(ring, 2))

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from([8, 16, 32]), st.integers(0, 2**32))
    def test_ring_laws_against_bigint_oracle(self, n, seed):
        rng = np.random.default_rng(seed)
        ring = ring_for(n, 3)
        a, b, c = (rand_element(ring, rng) for _ in range(3))
        assert ring_mul(a, b) == ring_mul(b, a)
        assert ring_add(a, b) == ring_add(b, a)
        assert ring_mul(ring_mul(a, b), c) == ring_mul(a, ring_mul(b, c))
        assert ring_add(ring_add(a, b), c) == ring_add(a, ring_add(b, c))
        total = 1
        for q in ring.primes:
            total *= q
        big_a = reconstruct(a.limbs, ring.primes)
        big_b = reconstruct(b.limbs, ring.primes)
        expect = schoolbook_negacyclic(big_a, big_b, total)
        assert ring_mul(a, b) == from_bigints(ring, expect)


class TestAddSub:
    def test_add_zero(self):
        rng = np.random.default_rng(0)
        ring = ring_for(16, 2)
        a = rand_element(ring, rng)
        assert ring_add(a, zeros(ring)) == a

    def test_self_sub(self):
        rng = np.random.default_rng(1)
        ring = ring_for(16, 2)
        a = rand_element(ring, rng)
        assert np.all(ring_sub(a, a).limbs == 0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32))
    def test_add_then_sub(self, seed):
        rng = np.random.default_rng(seed)
        ring = ring_for(32, 3)
        a, b = rand_element(ring, rng), rand_element(ring, rng)
        assert ring_sub(ring_add(a, b), b) == a
        assert ring_add(a, ring_neg(a)) == zeros(ring)

    def test_mul_integer(self):
        rng = np.random.default_rng(2)
        ring = ring_for(8, 3)
        a = rand_element(ring, rng)
        big = reconstruct(a.limbs, ring.primes)
        assert mul_integer(a, -12345678901234567) == from_bigints(ring, [v * -12345678901234567 for v in big])


class TestSamplers:
    def test_ternary_range_and_determinism(self):
        ring = ring_for(16, 3)
        a = sample_ternary(ring, np.random.default_rng(7))
        for row, q in zip(a.limbs, ring.primes):
            assert set(row.tolist()) <= {0, 1, q - 1}
        assert sample_ternary(ring, np.random.default_rng(7)) == a

    def test_ternary_frequencies(self):
        ring = RnsRing(16384, find_ntt_primes(30, 1, 16384))
        a = sample_ternary(ring, np.random.default_rng(11))
        q = ring.primes[0]
        row = a.limbs[0]
        for sym in (0, 1, q - 1):
            freq = np.mean(row == sym)
            assert abs(freq - 1 / 3) < 0.05

    def test_gaussian_statistics(self):
        n = 16384
        sigma = 3.2
        ring = RnsRing(n, find_ntt_primes(30, 1, n))
        a = sample_gaussian(ring, np.random.default_rng(12), sigma)
        vals = np.array(reconstruct(a.limbs, ring.primes))
        assert abs(vals.mean()) < 3 * sigma / np.sqrt(n)
        assert np.max(np.abs(vals)) <= 6 * sigma
        assert abs(vals.std() - sigma) < 0.1
        assert sample_gaussian(ring, np.random.default_rng(12), sigma) == a

    def test_uniform_range_and_chi_square(self):
        ring = RnsRing(32, [193, 257])
        rng = np.random.default_rng(13)
        a = np.hstack([sample_uniform(ring, rng).limbs for _ in range(300)])
        for row, q in zip(a, ring.primes):
            assert row.max() < q
            counts = np.bincount(row.astype(np.int64), minlength=q)
            expected = len(row) / q
            chi2 = float(((counts - expected) ** 2 / expected).sum())
            # dof = q - 1; mean ~ q, std ~ sqrt(2q); 5 sigma bound
            assert chi2 < q + 5 * np.sqrt(2 * q)
        assert sample_uniform(ring, np.random.default_rng(5)) == sample_uniform(ring, np.random.default_rng(5))


class TestDropLimb:
    def test_exact_multiple(self):
        ring = ring_for(8, 3)
        q_top = ring.primes[-1]
        a = from_bigints(ring, [5 * q_top] + [0] * 7)
        assert drop_limb(a) == from_signed(ring, [5] + [0] * 7, count=2)

    def test_zero(self):
        ring = ring_for(8, 3)
        assert drop_limb(zeros(ring)) == zeros(ring, 2)

    def test_last_limb(self):
        ring = ring_for(8, 1)
        with pytest.raises(LevelMismatch):
            drop_limb(zeros(ring))

    @pytest.mark.parametrize("domain", [Domain.COEFFICIENT, Domain.NTT])
    def test_matches_bigint_rounding(self, domain):
        rng = np.random.default_rng(21)
        ring = ring_for(8, 3)
        q_top = ring.primes[-1]
        for _ in range(25):
            a = rand_element(ring, rng)
            big = reconstruct(a.limbs, ring.primes)
            expect = from_bigints(ring, [round_half_away(v, q_top) for v in big], count=2)
            got = drop_limb(a if domain is Domain.COEFFICIENT else ntt_forward(a))
            if domain is Domain.NTT:
                got = ntt_inverse(got)
            assert got == expect

    def test_divide_round_low_matches_oracle(self):
        rng = np.random.default_rng(22)
        primes = find_ntt_primes(61, 2, 16) + find_ntt_primes(30, 2, 16)
        ring = RnsRing(16, primes)
        p = primes[0] * primes[1]
        for _ in range(10):
            a = rand_element(ring, rng)
            big = reconstruct(a.limbs, ring.primes)
            got = ntt_inverse(divide_round_low(ntt_forward(a), 2))
            expect = from_bigints(ring, [round_half_away(v, p) for v in big], count=2, offset=2)
            assert got == expect


class TestCrtAndGalois:
    def test_crt_float_matches_bigint(self):
        rng = np.random.default_rng(31)
        primes = find_ntt_primes(60, 1, 32) + find_ntt_primes(40, 3, 32)
        ring = RnsRing(32, primes)
        small = rng.integers(-(2**60), 2**60, size=32)
        vals = [int(v) * 2**50 + int(w) for v, w in zip(small, rng.integers(-1000, 1000, size=32))]
        a = ntt_forward(from_bigints(ring, vals))
        got = crt_float(a)
        for g, v in zip(got, vals):
            assert g == pytest.approx(float(v), rel=1e-14)

    @pytest.mark.parametrize("g", [5, 25, 2 * 16 - 1, 3])
    def test_galois_matches_coefficient_map(self, g):
        rng = np.random.default_rng(32)
        ring = ring_for(16, 2)
        a = from_signed(ring, rng.integers(-50, 50, size=16))
        coeffs = reconstruct(a.limbs, ring.primes)
        n = 16
        expect = [0] * n
        for i, c in enumerate(coeffs):
            e = i * g % (2 * n)
            if e < n:
                expect[e] += c
            else:
                expect[e - n] -= c
        assert apply_galois(a, g) == from_signed(ring, expect)
