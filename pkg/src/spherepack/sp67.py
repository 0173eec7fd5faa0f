"""The 1967 sphere-packing bound for DMCs."""

from __future__ import annotations

import math

from .channel import DiscreteChannel, MemorylessChannel
from .exponents import esp
from .results import BoundResult, CodeSpec, vacuous

LN8 = math.log(8.0)


def sp67_o1(spec: CodeSpec, num_inputs: int) -> float:
    n = spec.n
    return LN8 / n + num_inputs * math.log(n) / n


def sp67_o2(spec: CodeSpec, p_min: float) -> float:
    n = spec.n
    return math.sqrt(8.0 / n) * (1.0 - 0.5 * math.log(p_min)) + LN8 / n


def sp67_bound(ch: MemorylessChannel, spec: CodeSpec) -> BoundResult:
    """ln P_e >= -N [E_sp(R - O_1) + O_2]."""
    if not isinstance(ch, DiscreteChannel):
        raise TypeError("the 1967 bound needs a finite-output channel (P_min is undefined otherwise)")
    o1 = sp67_o1(spec, ch.num_inputs)
    o2 = sp67_o2(spec, ch.p_min)
    shifted = spec.rate_nats - o1
    if shifted <= 0:
        return vacuous("sp67", "R - O_1 <= 0", n=spec.n, o1=o1)
    ex = esp(ch, shifted)
    if ex.diverges:
        return vacuous("sp67", "E_sp diverges at the shifted rate", n=spec.n, o1=o1)
    exponent = ex.value + o2
    log_pe = -spec.n * exponent
    return BoundResult(
        min(log_pe, 0.0),
        "sp67",
        {"rho": ex.optimizer_rho},
        {"n": spec.n, "exponent": exponent, "o1": o1, "o2": o2, "esp": ex.value, "clipped": log_pe > 0},
    )
