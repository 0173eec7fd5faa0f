"""Quadrature grids and log-domain integration helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import logsumexp


@lru_cache(maxsize=64)
def _gl_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product Gauss-Legendre grid on a box.

    ``nodes`` has shape (G, d); ``log_weights`` has shape (G,).
    ``certified_tol`` is the relative error observed when integrating the
    unit-variance-scaled Gaussian the grid was built for (see
    :func:`gauss_legendre_box`).
    """

    nodes: np.ndarray
    log_weights: np.ndarray
    certified_tol: float
    half_width: float
    order: int

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def log_integrate(self, log_values: np.ndarray, axis: int = -1) -> np.ndarray:
        """ln of the integral of exp(log_values) over the grid."""
        return logsumexp(log_values + self.log_weights, axis=axis)


def gauss_legendre_box(dim: int, half_width: float, order: int, sigma: float) -> QuadratureGrid:
    """Build a ``dim``-dimensional Gauss-Legendre grid on [-half_width, half_width]^dim.

    The certified tolerance is measured, not assumed: the grid integrates a
    centred Gaussian of per-dimension deviation ``sigma`` and the deviation of
    the result from 1 (plus the analytic mass outside the box) is recorded.
    """
    if dim not in (1, 2):
        raise ValueError("only 1-D and 2-D output grids are supported")
    if order < 2:
        raise ValueError("order must be at least 2")
    if half_width <= 0 or sigma <= 0:
        raise ValueError("half_width and sigma must be positive")
    x, w = _gl_rule(order)
    pts = half_width * x
    logw = np.log(w * half_width)
    if dim == 1:
        nodes = pts[:, None]
        log_weights = logw
    else:
        gx, gy = np.meshgrid(pts, pts, indexing="ij")
        nodes = np.column_stack([gx.ravel(), gy.ravel()])
        log_weights = (logw[:, None] + logw[None, :]).ravel()

    log_gauss = -0.5 * np.sum(nodes**2, axis=1) / sigma**2 - 0.5 * dim * math.log(2 * math.pi * sigma**2)
    total = math.exp(logsumexp(log_gauss + log_weights))
    tol = abs(total - 1.0) + 1e-15
    nodes.setflags(write=False)
    log_weights.setflags(write=False)
    return QuadratureGrid(nodes, log_weights, tol, half_width, order)


# ---------------------------------------------------------------------------
# adaptive 1-D integration of exp(logf) in the log domain

_PANEL_ORDER = 20


def _log_panel(logf: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    x, w = _gl_rule(_PANEL_ORDER)
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b) + half * x
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = np.asarray(logf(pts), dtype=float)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    return float(logsumexp(vals + np.log(w * half)))


_MAX_DEPTH = 12


def _log_adaptive(logf, a, b, whole, rtol, depth, floor=-np.inf):
    mid = 0.5 * (a + b)
    left = _log_panel(logf, a, mid)
    right = _log_panel(logf, mid, b)
    both = float(np.logaddexp(left, right))
    if depth == 0 or both == -np.inf or both < floor:
        return both
    if whole == -np.inf or abs(math.expm1(whole - both)) <= rtol:
        return both
    return float(np.logaddexp(
        _log_adaptive(logf, a, mid, left, rtol, depth - 1, floor),
        _log_adaptive(logf, mid, b, right, rtol, depth - 1, floor),
    ))


def log_integrate(
    logf: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    peak: float,
    scale: float,
    rtol: float = 1e-12,
    drop: float = 60.0,
) -> float:
    """ln of the integral of exp(logf) over [a, b] for a unimodal integrand.

    ``peak`` locates the maximum of ``logf`` (may be an endpoint) and ``scale``
    is its local width. Panels of growing width are laid out away from the
    peak until the integrand has dropped ``drop`` nats below the running
    total; every panel is refined by adaptive bisection to ``rtol``.
    """
    if not b > a:
        raise ValueError("empty interval")
    peak = min(max(peak, a), b)
    scale = max(scale, 1e-300)
    logs = []
    for direction in (+1, -1):
        edge = b if direction > 0 else a
        pos = peak
        width = scale
        while (edge - pos) * direction > 0:
            nxt = pos + direction * width
            if (nxt - edge) * direction > 0:
                nxt = edge
            lo, hi = (pos, nxt) if direction > 0 else (nxt, pos)
            whole = _log_panel(logf, lo, hi)
            floor = logsumexp(logs) - drop if logs else -np.inf
            part = _log_adaptive(logf, lo, hi, whole, rtol, _MAX_DEPTH, floor)
            logs.append(part)
            pos = nxt
            width *= 1.6
            total = logsumexp(logs)
            with np.errstate(divide="ignore", invalid="ignore"):
                at_edge = float(np.asarray(logf(np.array([pos])), dtype=float)[0])
            # NaN at the edge counts as negligible
            if not at_edge >= total - drop and part < total - drop:
                break
    return float(logsumexp(logs))
