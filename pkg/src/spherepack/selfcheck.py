"""Quick invariant checks behind ``spherepack check``. Each takes well under a second."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .channel import make_bsc, make_mpsk_awgn
from .exponents import e0, e0_opt, mu0_with_derivatives, mu_fixed, random_coding_bound, tilted_measure
from .isp import isp_bound
from .results import CodeSpec
from .sp59 import log_cone_escape
from .sp67 import sp67_bound
from .vf import vf_bound


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _bsc_e0():
    got = e0(make_bsc(0.1), 1.0, [0.5, 0.5])
    want = math.log(2) - 2 * math.log(math.sqrt(0.9) + math.sqrt(0.1))
    err = abs(got - want)
    return err < 1e-13, f"|E0 - closed form| = {err:.2e}"


def _mu_identity():
    worst = 0.0
    for ch in (make_bsc(0.1), make_mpsk_awgn(8, 1.0)):
        for s in np.linspace(0.1, 0.9, 9):
            m = mu0_with_derivatives(ch, s)
            worst = max(worst, abs(m.mu0 + (1 - s) * e0_opt(ch, s / (1 - s))))
    return worst < 1e-8, f"max |mu0 + (1-s) E0| = {worst:.2e}"


def _mu_prime():
    ch, h, worst = make_bsc(0.1), 1e-5, 0.0
    for s in (0.25, 0.5, 0.75):
        log_f = tilted_measure(ch, s).log_f
        fd = (mu_fixed(ch, s + h, log_f)[0] - mu_fixed(ch, s - h, log_f)[0]) / (2 * h)
        m = mu0_with_derivatives(ch, s)
        worst = max(worst, abs(fd - m.mu0_prime) / abs(m.mu0_prime))
    return worst < 1e-6, f"max relative error of mu0' = {worst:.2e}"


def _half_space():
    got = log_cone_escape(10, math.pi / 2, 1.0)
    want = float(log_ndtr(-math.sqrt(10.0)))
    err = abs(got - want)
    return err < 1e-8, f"|ln Q(pi/2) - ln Phi(-sqrt(n) A)| = {err:.2e}"


def _ordering():
    bad = []
    ch = make_bsc(0.1)
    for n in (128, 512):
        for r in (0.2, 0.3):
            spec = CodeSpec(n, r)
            sp, v, i = sp67_bound(ch, spec).log_pe, vf_bound(ch, spec).log_pe, isp_bound(ch, spec).log_pe
            rc = random_coding_bound(ch, spec).log_pe
            if not (sp <= v + 1e-9 and v <= i + 1e-9 and i <= rc + 1e-9):
                bad.append((n, r))
    return not bad, f"violations: {bad}" if bad else "sp67 <= vf <= isp <= rc on 4 points"


def _quadrature():
    ch = make_mpsk_awgn(8, 1.0)
    mass = np.exp(np.logaddexp.reduce(ch.log_p + ch.log_w[None, :], axis=1))
    err = float(np.max(np.abs(mass - 1)))
    return err <= max(ch.quadrature.certified_tol, 1e-12), f"max |integral p(y|k) - 1| = {err:.2e}"


CHECKS = {
    "bsc_e0_closed_form": _bsc_e0,
    "mu0_e0_identity": _mu_identity,
    "mu0_prime_finite_difference": _mu_prime,
    "sp59_half_space": _half_space,
    "bound_ordering": _ordering,
    "psk_density_normalization": _quadrature,
}


def run_all() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
