"""Code parameters and bound records shared by every bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class CodeSpec:
    """Block length N, rate R = ln(M/L)/N in nats per use, list size L, expurgation fraction."""

    n: int
    rate_nats: float
    list_size: int = 1
    expurgation_alpha: float = 0.5

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"block length must be a positive integer, got {self.n!r}")
        if not self.rate_nats > 0 or not math.isfinite(self.rate_nats):
            raise ValueError(f"rate must be positive, got {self.rate_nats!r}")
        if int(self.list_size) != self.list_size or self.list_size < 1:
            raise ValueError("list size must be an integer >= 1")
        if not 0 < self.expurgation_alpha < 1:
            raise ValueError("expurgation fraction must lie in (0, 1)")

    @classmethod
    def from_bits(cls, n: int, rate_bits: float, **kw) -> "CodeSpec":
        return cls(n, rate_bits * math.log(2), **kw)

    @classmethod
    def from_codebook(cls, n: int, num_codewords: int, list_size: int = 1, **kw) -> "CodeSpec":
        return cls(n, math.log(num_codewords / list_size) / n, list_size, **kw)

    @property
    def rate_bits(self) -> float:
        return self.rate_nats / math.log(2)


@dataclass
class BoundResult:
    """Natural-log bound on the (average) block error probability.

    ``lower`` is True for converse bounds. ``vacuous`` marks results that
    carry no information (log_pe = -inf for a lower bound); ``reason`` says why.
    """

    log_pe: float
    kind: str
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    lower: bool = True
    vacuous: bool = False
    reason: str = ""

    @property
    def pe(self) -> float:
        return math.exp(self.log_pe) if self.log_pe > -745 else 0.0

    @property
    def exponent(self) -> float:
        """Realized per-use exponent -ln(P_e)/N when the block length is recorded."""
        n = self.diagnostics.get("n")
        return -self.log_pe / n if n else float("nan")


def vacuous(kind: str, reason: str, **diagnostics) -> BoundResult:
    return BoundResult(-math.inf, kind, {}, dict(diagnostics), True, True, reason)
