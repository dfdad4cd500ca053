"""Homomorphic evaluation: arithmetic, rescaling, rotations and composites.

Primitive products never rescale on their own; the result scale is the
product of the operand scales.  Composite operations (inner product,
matrix-vector, powers, polynomials) rescale right after every product and
encode their plaintext operands at the scale of the prime about to be
dropped, so the running scale stays pinned to the input's.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import LevelMismatch, NoRelinKey, OutOfLevels, ScaleMismatch, TooManySlots
from ..ring import apply_galois, drop_limb, mul_integer, ring_add, ring_mul, ring_neg, truncate
from .context import CkksContext
from .encoding import Plaintext, encode
from .scheme import Ciphertext, KeySet, galois_element, key_switch, normalize_step, relinearize

SCALE_RTOL = 2.0 ** -10


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (int(n) - 1).bit_length()


def ceil_log2(n: int) -> int:
    return 0 if n <= 1 else (int(n) - 1).bit_length()


def _same_scale(a: float, b: float) -> bool:
    return abs(a / b - 1.0) <= SCALE_RTOL


def drop_to_level(ct: Ciphertext, level: int) -> Ciphertext:
    """Lower the modulus without dividing (no scale change)."""
    if level > ct.level:
        raise LevelMismatch(f"cannot raise level {ct.level} to {level}")
    if level == ct.level:
        return ct
    return Ciphertext(tuple(truncate(p, level + 1) for p in ct.parts), ct.scale)


def _align_scales(ctx: CkksContext, a: Ciphertext, b_scale: float) -> Ciphertext:
    """Bring ``a`` up to ``b_scale`` when the ratio is (near) an integer."""
    ratio = b_scale / a.scale
    factor = round(ratio)
    if factor >= 2 and abs(ratio / factor - 1.0) <= SCALE_RTOL:
        return Ciphertext(tuple(mul_integer(p, factor) for p in a.parts), a.scale * factor)
    raise ScaleMismatch(f"scales {a.scale:.6g} and {b_scale:.6g} are not compatible")


def eval_add(ctx: CkksContext, a: Ciphertext, b: Ciphertext | Plaintext) -> Ciphertext:
    """Slotwise sum.

    Raises:
        LevelMismatch: operands at different levels.
        ScaleMismatch: scales neither equal (within ``2**-10``) nor an integer multiple.
    """
    if b.level != a.level:
        raise LevelMismatch(f"level mismatch: {a.level} vs {b.level}")
    if not _same_scale(a.scale, b.scale):
        if a.scale < b.scale:
            a = _align_scales(ctx, a, b.scale)
        elif isinstance(b, Ciphertext):
            b = _align_scales(ctx, b, a.scale)
        else:
            raise ScaleMismatch(f"plaintext scale {b.scale:.6g} below ciphertext scale {a.scale:.6g}")
    if isinstance(b, Plaintext):
        return Ciphertext((ring_add(a.parts[0], b.poly),) + a.parts[1:], a.scale)
    n = max(len(a.parts), len(b.parts))
    parts = []
    for i in range(n):
        if i < len(a.parts) and i < len(b.parts):
            parts.append(ring_add(a.parts[i], b.parts[i]))
        else:
            parts.append(a.parts[i] if i < len(a.parts) else b.parts[i])
    return Ciphertext(tuple(parts), a.scale)


def eval_neg(ct: Ciphertext) -> Ciphertext:
    return Ciphertext(tuple(ring_neg(p) for p in ct.parts), ct.scale)


def eval_sub(ctx: CkksContext, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    return eval_add(ctx, a, eval_neg(b))


def eval_add_scalar(ctx: CkksContext, ct: Ciphertext, value: float) -> Ciphertext:
    """Add a real constant to every slot (constant polynomial, flat NTT)."""
    c = int(round(value * ct.scale))
    p0 = ct.parts[0]
    consts = np.array([[c % q] for q in p0.primes], dtype=np.uint64)
    limbs = (p0.limbs + consts) % p0.moduli[:, None]
    return Ciphertext((p0.replace(limbs),) + ct.parts[1:], ct.scale)


def eval_mult_plain(ctx: CkksContext, ct: Ciphertext, pt: Plaintext) -> Ciphertext:
    """Slotwise product with a plaintext; scale becomes ``ct.scale * pt.scale``."""
    if pt.level != ct.level:
        raise LevelMismatch(f"level mismatch: ciphertext {ct.level} vs plaintext {pt.level}")
    return Ciphertext(tuple(ring_mul(p, pt.poly) for p in ct.parts), ct.scale * pt.scale)


def eval_mult_integer(ct: Ciphertext, k: int) -> Ciphertext:
    """Multiply every slot by an integer; the scale is unchanged."""
    return Ciphertext(tuple(mul_integer(p, k) for p in ct.parts), ct.scale)


def eval_mult_ct(ctx: CkksContext, a: Ciphertext, b: Ciphertext, keys: KeySet | None = None,
                 relin: bool = True) -> Ciphertext:
    """Tensor product of two degree-1 ciphertexts, relinearized by default.

    Raises:
        LevelMismatch: different levels or non-degree-1 input.
        NoRelinKey: ``relin`` requested without a relinearization key.
    """
    if a.level != b.level:
        raise LevelMismatch(f"level mismatch: {a.level} vs {b.level}")
    if a.degree != 1 or b.degree != 1:
        raise LevelMismatch("ciphertext multiplication needs degree-1 inputs")
    a0, a1 = a.parts
    b0, b1 = b.parts
    d0 = ring_mul(a0, b0)
    d1 = ring_add(ring_mul(a0, b1), ring_mul(a1, b0))
    d2 = ring_mul(a1, b1)
    out = Ciphertext((d0, d1, d2), a.scale * b.scale)
    if relin:
        if keys is None:
            raise NoRelinKey("relinearization requested without keys")
        out = relinearize(ctx, out, keys)
    return out


def rescale(ctx: CkksContext, ct: Ciphertext) -> Ciphertext:
    """Divide by the top prime and drop it.

    Raises:
        OutOfLevels: the ciphertext is already at level 0.
    """
    if ct.level == 0:
        raise OutOfLevels("modulus chain exhausted: no prime left to rescale by")
    q_top = ctx.q_at(ct.level)
    return Ciphertext(tuple(drop_limb(p) for p in ct.parts), ct.scale / q_top)


def eval_rotate(ctx: CkksContext, ct: Ciphertext, step: int, keys: KeySet) -> Ciphertext:
    """Slot ``i`` of the result is slot ``(i + step) mod B`` of the input.

    Raises:
        NoRotationKey: no key for ``step mod B``.
    """
    st = normalize_step(ctx, step)
    if st == 0:
        return ct
    key = keys.rotation_key(st)
    if ct.degree != 1:
        ct = relinearize(ctx, ct, keys)
    g = galois_element(ctx, st)
    c0 = apply_galois(ct.parts[0], g)
    c1 = apply_galois(ct.parts[1], g)
    d0, d1 = key_switch(ctx, c1, key)
    return Ciphertext((ring_add(c0, d0), d1), ct.scale)


def plain_for(ctx: CkksContext, values, ct: Ciphertext) -> Plaintext:
    """Encode ``values`` for a product with ``ct`` that is followed by a rescale.

    The scale equals the prime that the rescale removes, so the product's
    scale returns exactly to ``ct.scale``.
    """
    if ct.level == 0:
        raise OutOfLevels("no level left for a plaintext product")
    return encode(ctx, values, scale=float(ctx.q_at(ct.level)), level=ct.level)


def mult_plain_rescale(ctx: CkksContext, ct: Ciphertext, values) -> Ciphertext:
    return rescale(ctx, eval_mult_plain(ctx, ct, plain_for(ctx, values, ct)))


def sum_slots(ctx: CkksContext, ct: Ciphertext, width: int, keys: KeySet, stride: int = 1) -> Ciphertext:
    """Rotate-and-add so slot ``t`` holds ``sum_{i<width} slot[t + i*stride]``."""
    step = stride
    while step < width * stride:
        ct = eval_add(ctx, ct, eval_rotate(ctx, ct, step, keys))
        step *= 2
    return ct


def replicate(ctx: CkksContext, ct: Ciphertext, copies: int, stride: int, keys: KeySet) -> Ciphertext:
    """Copy the first ``stride`` slots into ``next_pow2(copies)`` consecutive blocks.

    Assumes slots beyond ``stride`` are zero.
    """
    shift = stride
    for _ in range(ceil_log2(copies)):
        ct = eval_add(ctx, ct, eval_rotate(ctx, ct, -shift, keys))
        shift *= 2
    return ct


def inner_product_steps(n: int) -> list[int]:
    return [1 << i for i in range(ceil_log2(n))]


def replicate_steps(copies: int, stride: int) -> list[int]:
    return [-(stride << i) for i in range(ceil_log2(copies))]


def block_sum_steps(blocks: int, stride: int) -> list[int]:
    return [stride << i for i in range(ceil_log2(blocks))]


def mat_vec_steps(features: int, outputs: int) -> list[int]:
    fp = next_pow2(features)
    return inner_product_steps(fp) + replicate_steps(outputs, fp)


def eval_inner_product(ctx: CkksContext, ct_x: Ciphertext, pt_w: Plaintext, n: int,
                       keys: KeySet) -> Ciphertext:
    """Slot 0 holds ``sum_{i<n} x_i * w_i`` after one product, a rescale and
    ``log2(n)`` rotations (``n`` padded to a power of two).  Other slots hold
    partial sums."""
    width = next_pow2(n)
    if width > ctx.slots:
        raise TooManySlots(f"inner product width {width} exceeds the batch size {ctx.slots}")
    ct = rescale(ctx, eval_mult_plain(ctx, ct_x, pt_w))
    return sum_slots(ctx, ct, width, keys)


def block_layout(ctx: CkksContext, features: int, outputs: int) -> int:
    """Block width for a packed matrix-vector product; score ``j`` sits at ``j * width``."""
    width = next_pow2(features)
    if width * next_pow2(outputs) > ctx.slots:
        raise TooManySlots(f"{outputs} blocks of {width} slots exceed the batch size {ctx.slots}")
    return width


def eval_mat_vec(ctx: CkksContext, ct_x: Ciphertext, matrix, keys: KeySet) -> Ciphertext:
    """``y_j = sum_i x_i * W[i, j]`` for an ``F x C`` plaintext matrix.

    ``x`` (slots ``0..F-1``, zeros elsewhere) is replicated into ``C`` blocks of
    ``next_pow2(F)`` slots, multiplied by the column-per-block weight
    plaintext, and summed within each block.  ``y_j`` lands at slot ``j * width``.
    """
    w = np.asarray(matrix, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError("matrix must be 2-D (features x outputs)")
    f, c = w.shape
    width = block_layout(ctx, f, c)
    rep = replicate(ctx, ct_x, c, width, keys)
    layout = np.zeros(ctx.slots)
    for j in range(c):
        layout[j * width:j * width + f] = w[:, j]
    prod = mult_plain_rescale(ctx, rep, layout)
    return sum_slots(ctx, prod, width, keys)


def power_depth(d: int) -> int:
    return ceil_log2(d)


def eval_power(ctx: CkksContext, ct: Ciphertext, d: int, keys: KeySet,
               cache: dict[int, Ciphertext] | None = None) -> Ciphertext:
    """``x**d`` by the balanced power tree ``x**d = x**h * x**(d-h)``,
    ``h = 2**(ceil(log2 d) - 1)``; consumes ``ceil(log2 d)`` levels.

    Raises:
        OutOfLevels: fewer than ``ceil(log2 d)`` levels left.
    """
    if d < 1:
        raise ValueError("power must be >= 1")
    if power_depth(d) > ct.level:
        raise OutOfLevels(f"x**{d} needs {power_depth(d)} levels, {ct.level} left")
    memo = {1: ct} if cache is None else cache
    memo.setdefault(1, ct)

    def get(k: int) -> Ciphertext:
        if k in memo:
            return memo[k]
        h = 1 << (ceil_log2(k) - 1)
        a, b = get(h), get(k - h)
        lvl = min(a.level, b.level)
        a, b = drop_to_level(a, lvl), drop_to_level(b, lvl)
        out = rescale(ctx, eval_mult_ct(ctx, a, b, keys))
        memo[k] = out
        return out

    return get(d)


def poly_depth(degree: int) -> int:
    """Levels used by :func:`eval_poly` for a polynomial of this degree."""
    return ceil_log2(degree) + 1 if degree >= 1 else 0


def eval_poly(ctx: CkksContext, ct: Ciphertext, coeffs: Sequence[float], keys: KeySet) -> Ciphertext:
    """Slotwise ``p(x) = sum_k coeffs[k] * x**k`` (lowest degree first).

    Powers come from :func:`eval_power`; each term is then scaled by an
    integer chosen so every term lands on the same level and on the scale
    ``2**S`` exactly, and the constant is added last.  Uses
    ``ceil(log2 d) + 1`` levels.

    Raises:
        OutOfLevels: budget smaller than ``ceil(log2 d) + 1``.
    """
    cs = [float(c) for c in coeffs]
    while len(cs) > 1 and cs[-1] == 0.0:
        cs.pop()
    degree = len(cs) - 1
    tau = ctx.delta
    if degree == 0:
        zero = eval_mult_integer(ct, 0)
        return eval_add_scalar(ctx, Ciphertext(zero.parts, tau), cs[0])
    need = poly_depth(degree)
    if need > ct.level:
        raise OutOfLevels(f"degree {degree} needs {need} levels, {ct.level} left")
    out_level = ct.level - need
    q = ctx.q_at(out_level + 1)
    memo: dict[int, Ciphertext] = {}
    acc = None
    for k in range(1, degree + 1):
        if cs[k] == 0.0:
            continue
        xk = drop_to_level(eval_power(ctx, ct, k, keys, memo), out_level + 1)
        factor = int(round(cs[k] * tau * q / xk.scale))
        term = eval_mult_integer(xk, factor)
        term = rescale(ctx, Ciphertext(term.parts, tau * q))
        acc = term if acc is None else eval_add(ctx, acc, term)
    return eval_add_scalar(ctx, acc, cs[0])
