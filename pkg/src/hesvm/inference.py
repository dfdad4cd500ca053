"""Encrypted SVM inference: encrypt features, evaluate the decision function
under encryption, decrypt, classify.

Model parameters are encoded as plaintexts by default; ``encrypt_weights``
switches the weight and bias operands to ciphertexts (the depth is the same,
the products become ciphertext-ciphertext).  Score layout:

- packed (default): one ciphertext, score ``j`` at slot ``j * next_pow2(F)``.
- per-class: ``C`` ciphertexts, each score in slot 0.
- ``poly_dual`` always evaluates one ciphertext per class.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .ckks import (
    Ciphertext,
    CkksContext,
    KeySet,
    decode,
    decrypt,
    drop_to_level,
    encode,
    encrypt,
    eval_add,
    eval_add_scalar,
    eval_mult_ct,
    eval_mult_plain,
    eval_power,
    rescale,
)
from .ckks.evaluator import (
    block_layout,
    block_sum_steps,
    ceil_log2,
    inner_product_steps,
    next_pow2,
    replicate,
    replicate_steps,
    sum_slots,
)
from .errors import OutOfLevels, TooManySlots
from .svm.model import Kernel, SvmModel, classify, decision


@dataclass(frozen=True)
class InferenceOptions:
    """Evaluation switches.

    Attributes:
        mask: Multiply by a 0/1 mask so only score slots survive (one extra level).
        packed: Evaluate all classes in one ciphertext (matrix-vector layout).
        encrypt_weights: Use encrypted weights and biases instead of plaintexts.
    """

    mask: bool = False
    packed: bool = True
    encrypt_weights: bool = False


def required_depth(kernel, degree: int = 3, mask: bool = False) -> int:
    """Levels consumed by the encrypted decision function.

    linear: 1 (weight product).  poly_primal: 1 + ceil(log2 d) (power tree).
    poly_dual: 1 (support-vector product) + ceil(log2 d) + 1 (dual coefficients).
    The mask adds one level to each.
    """
    k = Kernel.parse(kernel)
    if k is Kernel.LINEAR:
        depth = 1
    elif k is Kernel.POLY_PRIMAL:
        depth = 1 + ceil_log2(degree)
    else:
        depth = 2 + ceil_log2(degree)
    return depth + int(mask)


def required_rotations(model: SvmModel, options: InferenceOptions = InferenceOptions()) -> list[int]:
    """Rotation steps the evaluation uses (keys must exist for each)."""
    f = model.feature_count
    fp = next_pow2(f)
    if model.kernel is Kernel.POLY_DUAL:
        s = model.support_vectors.shape[0]
        steps = replicate_steps(s, fp) + inner_product_steps(fp) + block_sum_steps(s, fp)
    elif options.packed:
        steps = inner_product_steps(fp) + replicate_steps(model.n_scores, fp)
    else:
        steps = inner_product_steps(fp)
    return sorted(set(steps))


@dataclass
class EncryptedModel:
    """Model operands bound to one context, encoded (or encrypted) on first use.

    Operands depend on the level they meet the ciphertext at, so they are
    cached per ``(name, level)``; the first evaluation fills the cache.
    """

    ctx: CkksContext
    model: SvmModel
    options: InferenceOptions = InferenceOptions()
    public: tuple | None = None
    rng: np.random.Generator | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.options.encrypt_weights and (self.public is None or self.rng is None):
            raise ValueError("encrypted weights need the public key and a generator")
        fp = next_pow2(self.model.feature_count)
        if self.model.kernel is Kernel.POLY_DUAL:
            block_layout(self.ctx, self.model.feature_count, self.model.support_vectors.shape[0])
        elif self.options.packed:
            block_layout(self.ctx, self.model.feature_count, self.model.n_scores)
        elif fp > self.ctx.slots:
            raise TooManySlots(f"{self.model.feature_count} features exceed the batch size")
        self.width = fp

    @property
    def n_scores(self) -> int:
        return self.model.n_scores

    def score_slots(self) -> list[tuple[int, int]]:
        """``(ciphertext index, slot)`` for each score."""
        if self.model.kernel is not Kernel.POLY_DUAL and self.options.packed:
            return [(0, j * self.width) for j in range(self.n_scores)]
        return [(j, 0) for j in range(self.n_scores)]

    # operand construction --------------------------------------------------

    def _operand(self, name: str, values, ct: Ciphertext, scale: float, secret_ok: bool = True):
        key = (name, ct.level, scale)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.options.encrypt_weights and secret_ok:
            top = encode(self.ctx, values, scale=scale)
            op = drop_to_level(encrypt(self.ctx, top, self.public, self.rng), ct.level)
        else:
            op = encode(self.ctx, values, scale=scale, level=ct.level)
        self._cache[key] = op
        return op

    def multiply(self, name: str, values, ct: Ciphertext, keys: KeySet, secret_ok: bool = True) -> Ciphertext:
        """Product with a model operand, rescaled back to ``ct.scale``."""
        if ct.level == 0:
            raise OutOfLevels("no level left for a model product")
        op = self._operand(name, values, ct, float(self.ctx.q_at(ct.level)), secret_ok)
        if isinstance(op, Ciphertext):
            prod = eval_mult_ct(self.ctx, ct, op, keys)
        else:
            prod = eval_mult_plain(self.ctx, ct, op)
        return rescale(self.ctx, prod)

    def add(self, name: str, values, ct: Ciphertext) -> Ciphertext:
        return eval_add(self.ctx, ct, self._operand(name, values, ct, ct.scale))

    def mask(self, ct: Ciphertext, slots) -> Ciphertext:
        m = np.zeros(self.ctx.slots)
        m[list(slots)] = 1.0
        return self.multiply("mask", m, ct, None, secret_ok=False)

    # layouts -----------------------------------------------------------------

    def packed_weights(self) -> np.ndarray:
        w = self.model.weights
        out = np.zeros(self.ctx.slots)
        for j in range(self.n_scores):
            out[j * self.width:j * self.width + w.shape[1]] = w[j]
        return out

    def packed_bias(self) -> np.ndarray:
        out = np.zeros(self.ctx.slots)
        out[np.arange(self.n_scores) * self.width] = self.model.intercepts
        return out


def encrypt_features(ctx: CkksContext, x, public, rng: np.random.Generator) -> Ciphertext:
    """Pack ``x`` into slots ``0..F-1`` (zeros elsewhere) and encrypt at the top level.

    Raises:
        TooManySlots: more features than the batch size.
    """
    return encrypt(ctx, encode(ctx, np.asarray(x, dtype=np.float64)), public, rng)


def _linear_scores(em: EncryptedModel, ct_x: Ciphertext, keys: KeySet, with_bias: bool) -> list[Ciphertext]:
    ctx = em.ctx
    model = em.model
    if em.options.packed:
        rep = replicate(ctx, ct_x, em.n_scores, em.width, keys)
        ct = sum_slots(ctx, em.multiply("w", em.packed_weights(), rep, keys), em.width, keys)
        if with_bias:
            ct = em.add("b", em.packed_bias(), ct)
        return [ct]
    out = []
    for j in range(em.n_scores):
        ct = sum_slots(ctx, em.multiply(f"w{j}", model.weights[j], ct_x, keys), em.width, keys)
        if with_bias:
            ct = em.add(f"b{j}", [model.intercepts[j]], ct)
        out.append(ct)
    return out


def _apply_mask(em: EncryptedModel, cts: list[Ciphertext]) -> list[Ciphertext]:
    if not em.options.mask:
        return cts
    slots_by_ct: dict[int, list[int]] = {}
    for i, s in em.score_slots():
        slots_by_ct.setdefault(i, []).append(s)
    return [em.mask(ct, slots_by_ct[i]) for i, ct in enumerate(cts)]


def encrypted_decision_linear(em: EncryptedModel, ct_x: Ciphertext, keys: KeySet) -> list[Ciphertext]:
    """``w_j . x`` (+ mask) + ``b_j`` in each score slot."""
    if em.model.kernel is not Kernel.LINEAR:
        raise ValueError("model is not linear")
    if em.options.mask:
        cts = _apply_mask(em, _linear_scores(em, ct_x, keys, with_bias=False))
        if em.options.packed:
            return [em.add("b", em.packed_bias(), cts[0])]
        return [em.add(f"b{j}", [em.model.intercepts[j]], ct) for j, ct in enumerate(cts)]
    return _linear_scores(em, ct_x, keys, with_bias=True)


def _dual_scores(em: EncryptedModel, ct_x: Ciphertext, keys: KeySet) -> list[Ciphertext]:
    ctx = em.ctx
    model = em.model
    sv = model.support_vectors
    s, f = sv.shape
    w = em.width
    rep = replicate(ctx, ct_x, s, w, keys)
    layout = np.zeros(ctx.slots)
    for i in range(s):
        layout[i * w:i * w + f] = model.gamma * sv[i]
    dots = sum_slots(ctx, em.multiply("sv", layout, rep, keys), w, keys)
    if model.coef0:
        dots = eval_add_scalar(ctx, dots, model.coef0)
    kern = eval_power(ctx, dots, model.degree, keys)
    out = []
    for j in range(em.n_scores):
        alpha = np.zeros(ctx.slots)
        alpha[np.arange(s) * w] = model.dual_coefs[j]
        ct = em.multiply(f"alpha{j}", alpha, kern, keys)
        out.append(sum_slots(ctx, ct, next_pow2(s), keys, stride=w))
    return out


def encrypted_decision_poly(em: EncryptedModel, ct_x: Ciphertext, keys: KeySet) -> list[Ciphertext]:
    """``(w_j . x + b_j)**d`` (primal) or the kernel sum plus ``b_j`` (dual).

    Raises:
        OutOfLevels: the chain is shorter than :func:`required_depth`.
    """
    model = em.model
    if model.kernel is Kernel.POLY_PRIMAL:
        cts = [eval_power(em.ctx, ct, model.degree, keys) for ct in _linear_scores(em, ct_x, keys, True)]
        return _apply_mask(em, cts)
    if model.kernel is Kernel.POLY_DUAL:
        cts = _apply_mask(em, _dual_scores(em, ct_x, keys))
        return [em.add(f"b{j}", [model.intercepts[j]], ct) for j, ct in enumerate(cts)]
    raise ValueError("model is not polynomial")


def encrypted_decision(em: EncryptedModel, ct_x: Ciphertext, keys: KeySet) -> list[Ciphertext]:
    if em.model.kernel is Kernel.LINEAR:
        return encrypted_decision_linear(em, ct_x, keys)
    return encrypted_decision_poly(em, ct_x, keys)


def decrypt_scores(em: EncryptedModel, cts: list[Ciphertext], secret) -> np.ndarray:
    decoded = [decode(em.ctx, decrypt(em.ctx, ct, secret)) for ct in cts]
    return np.array([decoded[i][slot] for i, slot in em.score_slots()])


@dataclass(frozen=True)
class InferenceResult:
    label: int
    scores: np.ndarray
    timings: dict[str, float]
    slot_error: float

    @property
    def total_time(self) -> float:
        return self.timings["encrypt"] + self.timings["evaluate"] + self.timings["decrypt"]


def classify_encrypted(x, em: EncryptedModel, keys: KeySet, rng: np.random.Generator) -> InferenceResult:
    """Encrypt, evaluate, decrypt and classify one sample, timing each stage."""
    clock = time.perf_counter
    t0 = clock()
    ct_x = encrypt_features(em.ctx, x, keys.public, rng)
    t1 = clock()
    cts = encrypted_decision(em, ct_x, keys)
    t2 = clock()
    scores = decrypt_scores(em, cts, keys.secret)
    t3 = clock()
    label = classify(scores, em.model.class_labels)
    plain = np.atleast_1d(decision(em.model, x))
    return InferenceResult(label, scores, {"encrypt": t1 - t0, "evaluate": t2 - t1, "decrypt": t3 - t2},
                           float(np.max(np.abs(scores - plain))))


@dataclass(frozen=True)
class TestsetResult:
    """Aggregates over a test set.  Times are per-sample averages (seconds)."""

    encrypted_accuracy: float
    plain_accuracy: float
    encrypted_time: float
    plain_time: float
    encrypted_labels: np.ndarray
    plain_labels: np.ndarray
    max_slot_error: float
    stage_times: dict[str, float]

    @property
    def scale_up(self) -> float:
        return self.encrypted_time / self.plain_time

    __test__ = False


def plain_inference_time(model: SvmModel, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Labels and average per-sample time of the plaintext decision + classify."""
    clock = time.perf_counter
    labels = []
    t0 = clock()
    for row in x:
        labels.append(classify(decision(model, row), model.class_labels))
    return np.array(labels), (clock() - t0) / len(x)


def infer_testset(x, y, em: EncryptedModel, keys: KeySet, rng: np.random.Generator) -> TestsetResult:
    """Run both arms over every row; one ciphertext per sample."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.shape[0] == 0:
        raise ValueError("empty test set")
    results = [classify_encrypted(row, em, keys, rng) for row in x]
    enc_labels = np.array([r.label for r in results])
    plain_labels, plain_time = plain_inference_time(em.model, x)
    stages = {k: float(np.mean([r.timings[k] for r in results])) for k in ("encrypt", "evaluate", "decrypt")}
    return TestsetResult(
        encrypted_accuracy=float(np.mean(enc_labels == y)),
        plain_accuracy=float(np.mean(plain_labels == y)),
        encrypted_time=float(np.mean([r.total_time for r in results])),
        plain_time=plain_time,
        encrypted_labels=enc_labels,
        plain_labels=plain_labels,
        max_slot_error=float(max(r.slot_error for r in results)),
        stage_times=stages,
    )
