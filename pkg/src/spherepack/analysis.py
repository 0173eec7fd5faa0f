"""SNR thresholds, the capacity-limit bound and rate/block-length crossover regions.

All SNRs at this level are Eb/N0 in dB and all rates are bits per channel
use (per modulation symbol). Conversions to the per-real-dimension
quantities the bounds need live here and nowhere else:

    Es/N0 (symbol)     = rate_bits * Eb/N0
    Es/N0 (real dim)   = Es/N0 (symbol) / dims
    SP59 dimensions n  = N * dims,  rate per dimension = R / dims

with dims = 1 for BPSK and 2 for the two-dimensional PSK families.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from scipy.optimize import brentq

from .channel import ContinuousChannel, make_mpsk_awgn
from .exponents import capacity, random_coding_bound
from .isp import isp_bound
from .results import CodeSpec
from .sp59 import sp59_bound
from .vf import vf_bound

LN10 = math.log(10.0)
DB_LO, DB_HI = -5.0, 30.0
LOG_RESIDUAL_TOL = 1e-4
DB_RESOLUTION = 1e-3
N_BRACKET = (16, 10**6)

BOUND_KINDS = ("sp59", "sp67", "vf", "isp", "rc", "clb")
_ALIASES = {"randomcoding": "rc", "random_coding": "rc", "random-coding": "rc"}


class ThresholdError(ArithmeticError):
    """The target error probability is not reached inside the SNR bracket."""


@dataclass(frozen=True)
class ChannelFamily:
    """A modulation over AWGN. ``order`` 0 means unconstrained (Gaussian) input."""

    name: str
    order: int
    dims: int

    @property
    def max_rate_bits(self) -> float:
        return math.inf if self.order == 0 else math.log2(self.order)

    def es_symbol(self, rate_bits: float, ebn0_db: float) -> float:
        return rate_bits * 10.0 ** (ebn0_db / 10.0)

    def es_dim(self, rate_bits: float, ebn0_db: float) -> float:
        return self.es_symbol(rate_bits, ebn0_db) / self.dims


FAMILIES = {
    "bpsk": ChannelFamily("bpsk", 2, 1),
    "qpsk": ChannelFamily("qpsk", 4, 2),
    "8psk": ChannelFamily("8psk", 8, 2),
    "gaussian": ChannelFamily("gaussian", 0, 1),
}


def family(name: str | ChannelFamily) -> ChannelFamily:
    if isinstance(name, ChannelFamily):
        return name
    key = name.lower().removesuffix("-awgn")
    if key not in FAMILIES:
        raise ValueError(f"unknown channel family {name!r}; choose from {sorted(FAMILIES)}")
    return FAMILIES[key]


def bound_kind(name: str) -> str:
    key = name.lower()
    key = _ALIASES.get(key, key)
    if key not in BOUND_KINDS:
        raise ValueError(f"unknown bound {name!r}; choose from {BOUND_KINDS}")
    return key


@lru_cache(maxsize=512)
def awgn_channel(order: int, es_over_n0: float, quad_order: int = 96) -> ContinuousChannel:
    """Cached M-PSK channel so every bound at one SNR point shares its memo tables."""
    return make_mpsk_awgn(order, es_over_n0, quad_order=quad_order)


@dataclass(frozen=True)
class ThresholdQuery:
    bound_kind: str
    channel_family: str
    n: int
    rate_bits: float
    target_pe: float
    alpha: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "bound_kind", bound_kind(self.bound_kind))
        family(self.channel_family)
        if not 0 < self.target_pe < 1:
            raise ValueError("target_pe must lie in (0, 1)")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.rate_bits > 0:
            raise ValueError("rate must be positive")


def eval_log_pe(kind: str, fam: str | ChannelFamily, n: int, rate_bits: float, ebn0_db: float,
                quad_order: int = 96, alpha: float = 0.5) -> float:
    """ln of the named bound on P_e for an N-symbol code at Eb/N0 = ``ebn0_db``."""
    kind, fam = bound_kind(kind), family(fam)
    if rate_bits >= fam.max_rate_bits:
        raise ValueError(f"rate {rate_bits} bits/use is not below log2(M) for {fam.name}")
    if kind == "sp59":
        res = sp59_bound(n * fam.dims, rate_bits * math.log(2) / fam.dims, fam.es_dim(rate_bits, ebn0_db))
        return res.log_pe
    if kind == "clb":
        return 0.0 if ebn0_db < clb_threshold(fam, rate_bits) else -math.inf
    if fam.order == 0:
        raise ValueError(f"{kind} needs a finite constellation")
    if kind == "sp67":
        raise ValueError("the 1967 bound needs a finite-output channel; use vf or isp on AWGN")
    ch = awgn_channel(fam.order, fam.es_symbol(rate_bits, ebn0_db), quad_order)
    spec = CodeSpec.from_bits(n, rate_bits, expurgation_alpha=alpha)
    fn = {"vf": vf_bound, "isp": isp_bound, "rc": random_coding_bound}[kind]
    return fn(ch, spec).log_pe


@dataclass
class Threshold:
    ebn0_db: float
    log_residual: float
    evaluations: int
    query: ThresholdQuery | None = None


def _invert(f: Callable[[float], float], guess: float) -> tuple[float, float, int]:
    """Root of the nonincreasing f on [DB_LO, DB_HI], bracketed by stepping from ``guess``."""
    count = [0]
    cache: dict[float, float] = {}

    def g(db):
        if db not in cache:
            count[0] += 1
            val = f(db)
            # a vacuous lower bound is -inf; keep brentq arithmetic finite
            cache[db] = max(val, -1e300) if not math.isnan(val) else math.nan
        return cache[db]

    x = min(max(guess, DB_LO), DB_HI)
    fx = g(x)
    step = 0.25
    if fx > 0:
        lo = x
        while True:
            hi = min(lo + step, DB_HI)
            if g(hi) <= 0:
                break
            if hi >= DB_HI:
                raise ThresholdError(f"target not reached below {DB_HI} dB")
            lo, step = hi, step * 2
    else:
        hi = x
        while True:
            lo = max(hi - step, DB_LO)
            if g(lo) > 0:
                break
            if lo <= DB_LO:
                raise ThresholdError(f"bound already below target at {DB_LO} dB")
            hi, step = lo, step * 2
    if g(hi) == 0:
        return hi, 0.0, count[0]
    # clipped or vacuous values make f flat; brentq still converges on the jump
    root = brentq(g, lo, hi, xtol=1e-7, rtol=1e-12, maxiter=200)
    return float(root), float(g(root)), count[0]


def snr_threshold(q: ThresholdQuery, guess: float | None = None, quad_order: int = 96) -> Threshold:
    """Eb/N0 (dB) at which the bound crosses ``q.target_pe``."""
    if q.bound_kind == "clb":
        return Threshold(clb_threshold(q.channel_family, q.rate_bits), 0.0, 0, q)
    target = math.log(q.target_pe)

    def f(db):
        return eval_log_pe(q.bound_kind, q.channel_family, q.n, q.rate_bits, db, quad_order, q.alpha) - target

    if guess is None:
        guess = clb_threshold(q.channel_family, q.rate_bits) + 1.0
    db, res, count = _invert(f, guess)
    return Threshold(db, res, count, q)


@lru_cache(maxsize=256)
def _clb_cached(name: str, rate_bits: float, quad_order: int) -> float:
    fam = FAMILIES[name]
    if not 0 < rate_bits < fam.max_rate_bits:
        raise ValueError(f"rate {rate_bits} bits/use must lie in (0, log2 M) for {fam.name}")
    if fam.order == 0:
        return gaussian_clb(rate_bits / fam.dims)
    target = rate_bits * math.log(2)

    def gap(db):
        ch = awgn_channel(fam.order, fam.es_symbol(rate_bits, db), quad_order)
        return capacity(ch) - target

    lo, hi = DB_LO, DB_HI
    if gap(lo) > 0:
        raise ThresholdError("capacity already exceeds the rate at the bracket floor")
    return float(brentq(gap, lo, hi, xtol=1e-9, rtol=1e-12))


def clb_threshold(fam: str | ChannelFamily, rate_bits: float, quad_order: int = 96) -> float:
    """Smallest Eb/N0 (dB) at which the constellation-constrained capacity reaches the rate."""
    return _clb_cached(family(fam).name, float(rate_bits), quad_order)


def gaussian_clb(rate_bits_per_dim: float) -> float:
    """Closed-form inversion of C = 1/2 log2(1 + 2 R Eb/N0) per real dimension."""
    r = rate_bits_per_dim
    if not r > 0:
        raise ValueError("rate must be positive")
    return 10.0 * math.log10(math.expm1(2 * r * math.log(2)) / (2 * r))


def clb_crossing_pe(fam: str | ChannelFamily, n: int, rate_bits: float, kind: str = "isp") -> float:
    """P_e below which the bound's threshold exceeds the CLB.

    Thresholds are nonincreasing in P_e, so this is just the bound evaluated
    at the CLB's SNR.
    """
    db = clb_threshold(fam, rate_bits)
    return math.exp(eval_log_pe(kind, fam, n, rate_bits, db))


@dataclass
class Crossover:
    n: int | None
    censored: bool
    thresholds: dict = field(default_factory=dict)


def crossover_length(fam: str | ChannelFamily, rate_bits: float, target_pe: float, bound_a: str,
                     bound_b: str, bracket: tuple[int, int] = N_BRACKET) -> Crossover:
    """Smallest N at which bound_a's SNR threshold is at least bound_b's.

    The indicator is assumed monotone in N (false, then true). ``censored``
    is True when it stays false across the bracket.
    """
    a, b = bound_kind(bound_a), bound_kind(bound_b)
    fam = family(fam)
    lo, hi = bracket
    if a == b:
        return Crossover(lo, False)
    seen: dict[int, tuple[float, float]] = {}

    def thresholds(n):
        if n not in seen:
            warm = [v for m, v in sorted(seen.items(), key=lambda kv: abs(kv[0] - n))[:1]]
            ta = snr_threshold(ThresholdQuery(a, fam.name, n, rate_bits, target_pe),
                               guess=warm[0][0] if warm else None).ebn0_db
            tb = snr_threshold(ThresholdQuery(b, fam.name, n, rate_bits, target_pe),
                               guess=warm[0][1] if warm else None).ebn0_db
            seen[n] = (ta, tb)
        return seen[n]

    def better(n):
        ta, tb = thresholds(n)
        return ta >= tb

    if better(lo):
        return Crossover(lo, False, dict(sorted(seen.items())))
    if not better(hi):
        return Crossover(None, True, dict(sorted(seen.items())))
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if better(mid):
            hi = mid
        else:
            lo = mid
    return Crossover(hi, False, dict(sorted(seen.items())))


def default_workers() -> int:
    raw = os.environ.get("SPHEREPACK_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sweep(fn: Callable, items: Iterable, workers: int | None = None) -> list:
    """Evaluate ``fn`` over ``items``; results come back in input order."""
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class RegionMap:
    """Crossover block lengths per rate for each bound pair at a fixed target P_e."""

    family: str
    rates: list[float]
    target_pe: float
    pairs: list[tuple[str, str]]
    lengths: dict[tuple[str, str], list[int | None]]

    def monotone_violations(self, pair: tuple[str, str] = ("isp", "sp59")) -> list[float]:
        """Rates at which N(R) increases over the previous uncensored rate."""
        out, prev = [], None
        for r, n in zip(self.rates, self.lengths.get(pair, [])):
            if n is None:
                continue
            if prev is not None and n > prev:
                out.append(r)
            prev = n
        return out

    def rows(self) -> list[dict]:
        rows = []
        for i, r in enumerate(self.rates):
            row = {"rate_bits": r, "target_pe": self.target_pe}
            for p in self.pairs:
                row[f"{p[0]}_vs_{p[1]}"] = self.lengths[p][i]
            rows.append(row)
        return rows


def region_map(fam: str, rates: Sequence[float], target_pe: float,
               pairs: Sequence[tuple[str, str]] = (("isp", "sp59"), ("vf", "sp59")),
               workers: int | None = None, bracket: tuple[int, int] = N_BRACKET) -> RegionMap:
    pairs = [(bound_kind(a), bound_kind(b)) for a, b in pairs]
    jobs = [(r, p) for r in rates for p in pairs]
    found = sweep(lambda job: crossover_length(fam, job[0], target_pe, job[1][0], job[1][1], bracket), jobs,
                  workers)
    lengths = {p: [] for p in pairs}
    for (r, p), c in zip(jobs, found):
        lengths[p].append(None if c.censored else c.n)
    return RegionMap(family(fam).name, [float(r) for r in rates], target_pe, pairs, lengths)


def curve(fam: str, n: int, rate_bits: float, bounds: Sequence[str], ebn0_db: Sequence[float],
          workers: int | None = None, quad_order: int = 96, alpha: float = 0.5) -> list[dict]:
    """ln P_e of each bound on an Eb/N0 grid, one row per SNR point."""
    kinds = [bound_kind(b) for b in bounds]
    if not kinds:
        raise ValueError("at least one bound is required")

    def row(db):
        out = {"ebn0_db": float(db)}
        for k in kinds:
            out[k] = eval_log_pe(k, fam, n, rate_bits, db, quad_order, alpha)
        return out

    return sweep(row, ebn0_db, workers)
