"""Deformation-parameter context: q, derived constants, precision policy."""

from dataclasses import dataclass

import mpmath as mp

from .errors import DomainError

EXTENDED_DPS = 40


@dataclass(frozen=True)
class QContext:
    """Deformation parameter q > 1 plus tolerance and precision policy.

    lam is the combination q - 1/q, which vanishes in the classical limit.
    precision selects the working arithmetic for scalar special-function
    evaluation: "double" (binary64, with transparent internal escalation
    where cancellation demands it) or "extended" (>= 30 significant digits
    throughout, for large windows where q**(4m) spans hundreds of orders
    of magnitude).
    """

    q: float
    tol_rel: float = 1e-10
    tail_eps: float = 1e-14
    max_terms: int = 4096
    precision: str = "double"

    def __post_init__(self):
        if not self.q > 1.0:
            raise DomainError(f"q must be > 1, got {self.q}")
        if not (0.0 < self.tail_eps < self.tol_rel < 1.0):
            raise DomainError(
                f"require 0 < tail_eps < tol_rel < 1, got "
                f"tail_eps={self.tail_eps}, tol_rel={self.tol_rel}")
        if self.max_terms < 64:
            raise DomainError(f"max_terms must be >= 64, got {self.max_terms}")
        if self.precision not in ("double", "extended"):
            raise DomainError(f"unknown precision mode {self.precision!r}")

    @property
    def lam(self) -> float:
        return self.q - 1.0 / self.q

    @property
    def is_extended(self) -> bool:
        return self.precision == "extended"

    @property
    def dps(self) -> int:
        """Base decimal precision for the scalar kernels (0 = binary64)."""
        return EXTENDED_DPS if self.is_extended else 0

    def qval(self):
        """q in the working arithmetic type."""
        if self.is_extended:
            with mp.workdps(EXTENDED_DPS):
                return mp.mpf(self.q)
        return self.q

    def out(self, x):
        """Coerce a computed value to the context's output type."""
        return x if self.is_extended else float(x)
