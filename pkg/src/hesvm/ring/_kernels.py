"""Word-level modular arithmetic kernels (numba).

Every residue is a ``uint64`` strictly below its modulus, and every modulus is
an odd prime below ``2**62``.  Products of two residues need 128 bits, which
numba cannot express directly, so the high word is assembled from four 32-bit
partial products.  Twiddle multiplications use Shoup's precomputed quotient;
arbitrary products use Montgomery reduction followed by a multiply with
``R**2 mod q`` to cancel the Montgomery factor.

All array kernels take a 2-D ``(limbs, N)`` array plus per-limb constants.
"""

import numba as nb
import numpy as np

_U32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)

_jit = nb.njit(cache=True, nogil=True, boundscheck=False)


@_jit
def mulhi(a, b):
    a0 = a & _U32
    a1 = a >> _S32
    b0 = b & _U32
    b1 = b >> _S32
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    p11 = a1 * b1
    mid = (p00 >> _S32) + (p01 & _U32) + (p10 & _U32)
    return p11 + (p01 >> _S32) + (p10 >> _S32) + (mid >> _S32)


@_jit
def shoup_mul(a, w, w_shoup, q):
    """``a * w mod q`` where ``w_shoup = floor(w * 2**64 / q)``."""
    qhat = mulhi(w_shoup, a)
    r = a * w - qhat * q
    if r >= q:
        r -= q
    return r


@_jit
def mont_mul(a, b, q, qinv_neg):
    """``a * b * 2**-64 mod q``; ``qinv_neg = -q**-1 mod 2**64``."""
    hi = mulhi(a, b)
    lo = a * b
    m = lo * qinv_neg
    mh = mulhi(m, q)
    carry = _ONE if lo != _ZERO else _ZERO
    t = hi + mh + carry
    if t >= q:
        t -= q
    return t


@_jit
def mul_mod(a, b, q, qinv_neg, r2):
    return mont_mul(mont_mul(a, b, q, qinv_neg), r2, q, qinv_neg)


@_jit
def ntt_forward_inplace(a, psi_rev, psi_rev_shoup, moduli):
    """Negacyclic Cooley-Tukey transform, natural order in, bit-reversed out."""
    limbs, n = a.shape
    for li in range(limbs):
        q = moduli[li]
        row = a[li]
        tw = psi_rev[li]
        tws = psi_rev_shoup[li]
        t = n
        m = 1
        while m < n:
            t >>= 1
            for i in range(m):
                j1 = 2 * i * t
                w = tw[m + i]
                ws = tws[m + i]
                for j in range(j1, j1 + t):
                    u = row[j]
                    v = shoup_mul(row[j + t], w, ws, q)
                    s = u + v
                    if s >= q:
                        s -= q
                    row[j] = s
                    if u >= v:
                        row[j + t] = u - v
                    else:
                        row[j + t] = u + q - v
            m <<= 1


@_jit
def ntt_inverse_inplace(a, ipsi_rev, ipsi_rev_shoup, moduli, n_inv, n_inv_shoup):
    """Gentleman-Sande inverse of :func:`ntt_forward_inplace`, scaled by 1/N."""
    limbs, n = a.shape
    for li in range(limbs):
        q = moduli[li]
        row = a[li]
        tw = ipsi_rev[li]
        tws = ipsi_rev_shoup[li]
        t = 1
        m = n
        while m > 1:
            j1 = 0
            h = m >> 1
            for i in range(h):
                w = tw[h + i]
                ws = tws[h + i]
                for j in range(j1, j1 + t):
                    u = row[j]
                    v = row[j + t]
                    s = u + v
                    if s >= q:
                        s -= q
                    row[j] = s
                    d = u - v if u >= v else u + q - v
                    row[j + t] = shoup_mul(d, w, ws, q)
                j1 += 2 * t
            t <<= 1
            m = h
        ni = n_inv[li]
        nis = n_inv_shoup[li]
        for j in range(n):
            row[j] = shoup_mul(row[j], ni, nis, q)


@_jit
def add_mod(a, b, moduli):
    limbs, n = a.shape
    out = np.empty_like(a)
    for li in range(limbs):
        q = moduli[li]
        for j in range(n):
            s = a[li, j] + b[li, j]
            out[li, j] = s - q if s >= q else s
    return out


@_jit
def sub_mod(a, b, moduli):
    limbs, n = a.shape
    out = np.empty_like(a)
    for li in range(limbs):
        q = moduli[li]
        for j in range(n):
            x = a[li, j]
            y = b[li, j]
            out[li, j] = x - y if x >= y else x + q - y
    return out


@_jit
def neg_mod(a, moduli):
    limbs, n = a.shape
    out = np.empty_like(a)
    for li in range(limbs):
        q = moduli[li]
        for j in range(n):
            x = a[li, j]
            out[li, j] = q - x if x != _ZERO else _ZERO
    return out


@_jit
def mul_mod_vec(a, b, moduli, qinv_neg, r2):
    limbs, n = a.shape
    out = np.empty_like(a)
    for li in range(limbs):
        q = moduli[li]
        qi = qinv_neg[li]
        rr = r2[li]
        for j in range(n):
            out[li, j] = mul_mod(a[li, j], b[li, j], q, qi, rr)
    return out


@_jit
def mul_add_mod_vec(acc, a, b, moduli, qinv_neg, r2):
    """``acc += a * b`` limb-wise, in place."""
    limbs, n = a.shape
    for li in range(limbs):
        q = moduli[li]
        qi = qinv_neg[li]
        rr = r2[li]
        for j in range(n):
            s = acc[li, j] + mul_mod(a[li, j], b[li, j], q, qi, rr)
            acc[li, j] = s - q if s >= q else s


@_jit
def mul_scalar_vec(a, scalars, scalars_shoup, moduli):
    """Multiply limb ``i`` by the residue ``scalars[i]``."""
    limbs, n = a.shape
    out = np.empty_like(a)
    for li in range(limbs):
        q = moduli[li]
        w = scalars[li]
        ws = scalars_shoup[li]
        for j in range(n):
            out[li, j] = shoup_mul(a[li, j], w, ws, q)
    return out


@_jit
def reduce_rows(src, moduli):
    """Reduce one residue row (values below some other prime) into every modulus."""
    n = src.shape[0]
    limbs = moduli.shape[0]
    out = np.empty((limbs, n), dtype=np.uint64)
    for li in range(limbs):
        q = moduli[li]
        for j in range(n):
            out[li, j] = src[j] % q
    return out


@_jit
def signed_to_residues(src, moduli):
    """Map signed int64 coefficients into each modulus."""
    n = src.shape[0]
    limbs = moduli.shape[0]
    out = np.empty((limbs, n), dtype=np.uint64)
    for li in range(limbs):
        q = moduli[li]
        qs = np.int64(q)
        for j in range(n):
            v = src[j] % qs
            out[li, j] = np.uint64(v)
    return out


@_jit
def divide_round_by_last(a_rest, last_centered_mod, inv_last, inv_last_shoup, moduli):
    """``(a_i - r_i) * q_last**-1 mod q_i`` for each remaining limb ``i``.

    ``last_centered_mod[i]`` holds the centred residue of the dropped limb
    already reduced into modulus ``i``.
    """
    limbs, n = a_rest.shape
    out = np.empty_like(a_rest)
    for li in range(limbs):
        q = moduli[li]
        w = inv_last[li]
        ws = inv_last_shoup[li]
        for j in range(n):
            x = a_rest[li, j]
            r = last_centered_mod[li, j]
            d = x - r if x >= r else x + q - r
            out[li, j] = shoup_mul(d, w, ws, q)
    return out


@_jit
def permute_rows(a, perm):
    limbs, n = a.shape
    out = np.empty_like(a)
    for li in range(limbs):
        for j in range(n):
            out[li, j] = a[li, perm[j]]
    return out


@_jit
def mixed_radix_digits(limbs_arr, moduli, inv_table, qinv_neg, r2):
    """Garner digits ``v`` with ``X = v0 + v1*q0 + v2*q0*q1 + ...``.

    ``inv_table[i, k]`` is ``q_k**-1 mod q_i`` for ``k < i``.
    """
    count, n = limbs_arr.shape
    v = np.empty_like(limbs_arr)
    for j in range(n):
        for i in range(count):
            q = moduli[i]
            x = limbs_arr[i, j]
            for k in range(i):
                vk = v[k, j] % q
                d = x - vk if x >= vk else x + q - vk
                x = mul_mod(d, inv_table[i, k], q, qinv_neg[i], r2[i])
            v[i, j] = x
    return v


@_jit
def crt_centered(digits, drop_moduli, weights, whole, moduli, qinv_neg, r2):
    """Centred CRT value of mixed-radix ``digits`` reduced into each target modulus.

    The value counts as negative when its top digit exceeds half its prime;
    for a single digit that is exact, for several it can misclassify values
    within one low-order unit of ``P/2`` (a one-unit rounding change).
    """
    k, n = digits.shape
    tcount = moduli.shape[0]
    out = np.empty((tcount, n), dtype=np.uint64)
    half_top = drop_moduli[k - 1] >> _ONE
    for t in range(tcount):
        q = moduli[t]
        for j in range(n):
            acc = _ZERO
            for i in range(k):
                s = acc + mul_mod(digits[i, j] % q, weights[t, i], q, qinv_neg[t], r2[t])
                acc = s - q if s >= q else s
            if digits[k - 1, j] > half_top:
                w = whole[t]
                acc = acc - w if acc >= w else acc + q - w
            out[t, j] = acc
    return out
