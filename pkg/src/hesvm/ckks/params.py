"""Encryption parameters and the lattice-security budget."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..errors import InvalidParams, SecurityBudgetExceeded

SECURITY_LEVELS = (128, 192, 256)

# Largest log2(Q*P) for uniform ternary secrets at classical security, per
# ring dimension.  Rows up to 2**15 follow the community HE security
# standard; the two largest rows are the extension used by common libraries.
MAX_LOG_Q: dict[int, dict[int, int]] = {
    1024: {128: 27, 192: 19, 256: 14},
    2048: {128: 54, 192: 37, 256: 29},
    4096: {128: 109, 192: 75, 256: 58},
    8192: {128: 218, 192: 152, 256: 118},
    16384: {128: 438, 192: 305, 256: 237},
    32768: {128: 881, 192: 611, 256: 476},
    65536: {128: 1747, 192: 1224, 256: 950},
    131072: {128: 3523, 192: 2449, 256: 1902},
}


def max_log_q(ring_dim: int, security_level: int) -> int:
    """Maximum total modulus bits that keep ``security_level`` bits of security."""
    if security_level not in SECURITY_LEVELS:
        raise InvalidParams(f"unsupported security level {security_level}")
    try:
        return MAX_LOG_Q[ring_dim][security_level]
    except KeyError:
        raise InvalidParams(f"no security data for ring dimension {ring_dim}") from None


def parse_security(value) -> int | None:
    """Accept ``128``/``"192"``/``"none"``/``None``."""
    if value is None or (isinstance(value, str) and value.lower() == "none"):
        return None
    level = int(value)
    if level not in SECURITY_LEVELS:
        raise InvalidParams(f"security level must be one of {SECURITY_LEVELS} or none, got {value}")
    return level


def _is_pow2(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


@dataclass(frozen=True)
class CkksParams:
    """The six encryption parameters.

    Attributes:
        ring_dim: Ring dimension ``N`` (power of two); ``N/2`` complex slots.
        mult_depth: Number of rescales the chain supports.
        scaling_bits: Encoding scale is ``2**scaling_bits``.
        first_mod_bits: Bit size of the base prime that survives every rescale.
        security_level: 128, 192, 256, or ``None`` to skip the budget check.
        batch_size: Slots used per ciphertext (power of two, at most ``N/2``).
        sigma: Standard deviation of the RLWE error distribution.
    """

    ring_dim: int = 16384
    mult_depth: int = 1
    scaling_bits: int = 30
    first_mod_bits: int = 60
    security_level: int | None = 128
    batch_size: int = 1024
    sigma: float = 3.2

    def validate(self) -> None:
        """Structural checks only; the security budget is checked once the chain exists."""
        if not _is_pow2(self.ring_dim) or self.ring_dim < 4:
            raise InvalidParams(f"ring dimension must be a power of two >= 4, got {self.ring_dim}")
        if self.mult_depth < 1:
            raise InvalidParams(f"multiplicative depth must be >= 1, got {self.mult_depth}")
        if self.scaling_bits < 1:
            raise InvalidParams(f"scaling bits must be positive, got {self.scaling_bits}")
        if self.first_mod_bits <= self.scaling_bits:
            raise InvalidParams(
                f"first modulus ({self.first_mod_bits} bits) must exceed the scale ({self.scaling_bits} bits)"
            )
        if self.first_mod_bits > 61:
            raise InvalidParams(f"first modulus above 61 bits is not supported, got {self.first_mod_bits}")
        if not _is_pow2(self.batch_size) or self.batch_size > self.ring_dim // 2:
            raise InvalidParams(
                f"batch size must be a power of two <= N/2 = {self.ring_dim // 2}, got {self.batch_size}"
            )
        if self.security_level is not None and self.security_level not in SECURITY_LEVELS:
            raise InvalidParams(f"unsupported security level {self.security_level}")
        if self.sigma <= 0:
            raise InvalidParams("sigma must be positive")

    @property
    def nominal_log_q(self) -> int:
        """``M + D*S``, the ciphertext modulus size before key-switching primes."""
        return self.first_mod_bits + self.mult_depth * self.scaling_bits

    def check_security(self, total_bits: int) -> None:
        if self.security_level is None:
            return
        limit = max_log_q(self.ring_dim, self.security_level)
        if total_bits > limit:
            raise SecurityBudgetExceeded(
                f"log2(QP) = {total_bits} bits exceeds {limit} for N={self.ring_dim} "
                f"at {self.security_level}-bit security"
            )

    def with_(self, **changes) -> CkksParams:
        return replace(self, **changes)
