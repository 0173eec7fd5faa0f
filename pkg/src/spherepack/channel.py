"""Memoryless channel models.

Every channel exposes the same log-domain view used by the exponent and
bound code: a (K, G) array ``log_p`` of log transition probabilities (or
densities evaluated at quadrature nodes) and a length-G array ``log_w`` of
log integration weights. For a discrete channel the weights are all one, so
sums over outputs and quadrature integrals share one code path.
"""

from __future__ import annotations

import math
from typing import Hashable, Sequence

import numpy as np
from scipy.special import ndtr

from .quadrature import QuadratureGrid, gauss_legendre_box

ROW_TOL = 1e-12


class ChannelError(ValueError):
    """Invalid channel construction or query."""


class MemorylessChannel:
    """Common base: immutable log-domain transition table plus memo tables."""

    log_p: np.ndarray
    log_w: np.ndarray
    symmetric: bool

    def __init__(self, log_p: np.ndarray, log_w: np.ndarray, symmetric: bool):
        log_p = np.array(log_p, dtype=float)
        log_w = np.array(log_w, dtype=float)
        if log_p.ndim != 2 or log_w.shape != (log_p.shape[1],):
            raise ChannelError("log_p must be (K, G) with log_w of length G")
        log_p.setflags(write=False)
        log_w.setflags(write=False)
        self.log_p = log_p
        self.log_w = log_w
        self.symmetric = bool(symmetric)
        # rho -> optimal input distribution, s -> MuTriple; filled lazily, never mutated afterwards
        self._memo: dict = {}

    @property
    def num_inputs(self) -> int:
        return self.log_p.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.log_p.shape[1]

    @property
    def is_discrete(self) -> bool:
        return False

    def uniform_input(self) -> "InputDistribution":
        return InputDistribution(np.full(self.num_inputs, 1.0 / self.num_inputs))


class InputDistribution:
    """Probability vector over the channel input alphabet."""

    def __init__(self, q: Sequence[float]):
        q = np.array(q, dtype=float)
        if q.ndim != 1 or q.size == 0:
            raise ChannelError("input distribution must be a non-empty vector")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise ChannelError("input distribution has negative or non-finite entries")
        if abs(q.sum() - 1.0) > ROW_TOL * max(1, q.size):
            raise ChannelError(f"input distribution sums to {q.sum()!r}, not 1")
        q = q / q.sum()
        q.setflags(write=False)
        self.q = q

    def __len__(self) -> int:
        return self.q.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.q, dtype=dtype)

    def __repr__(self) -> str:
        return f"InputDistribution({np.array2string(self.q, precision=6)})"

    @property
    def log_q(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.q)


def _is_block_symmetric(P: np.ndarray, digits: int = 12) -> bool:
    """Output alphabet partitions into blocks where rows and columns are permutations."""
    R = np.round(P, digits)
    groups: dict[tuple, list[int]] = {}
    for j in range(R.shape[1]):
        groups.setdefault(tuple(np.sort(R[:, j])), []).append(j)
    for cols in groups.values():
        sub = R[:, cols]
        first = np.sort(sub[0])
        if any(not np.array_equal(np.sort(row), first) for row in sub[1:]):
            return False
    return True


class DiscreteChannel(MemorylessChannel):
    """Finite-alphabet channel given by a K x J matrix of P(j|k)."""

    def __init__(
        self,
        transition,
        input_labels: Sequence[Hashable] | None = None,
        output_labels: Sequence[Hashable] | None = None,
        symmetric: bool | None = None,
    ):
        P = np.array(transition, dtype=float)
        if P.ndim != 2 or P.shape[0] < 1 or P.shape[1] < 1:
            raise ChannelError("transition matrix must be 2-D with K >= 1, J >= 1")
        if not np.all(np.isfinite(P)) or np.any(P < 0) or np.any(P > 1):
            raise ChannelError("transition entries must lie in [0, 1]")
        sums = P.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
        if bad.size:
            raise ChannelError(f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
        P.setflags(write=False)
        self.transition = P
        self.input_labels = tuple(input_labels) if input_labels is not None else tuple(range(P.shape[0]))
        self.output_labels = tuple(output_labels) if output_labels is not None else tuple(range(P.shape[1]))
        if len(self.input_labels) != P.shape[0] or len(self.output_labels) != P.shape[1]:
            raise ChannelError("label count does not match matrix shape")
        if symmetric is None:
            symmetric = _is_block_symmetric(P)
        with np.errstate(divide="ignore"):
            log_p = np.log(P)
        super().__init__(log_p, np.zeros(P.shape[1]), symmetric)

    @property
    def is_discrete(self) -> bool:
        return True

    @property
    def p_min(self) -> float:
        """Smallest non-zero transition probability."""
        return float(self.transition[self.transition > 0].min())

    def log_transition(self, j: int, k: int) -> float:
        K, J = self.transition.shape
        if not (0 <= k < K and 0 <= j < J):
            raise IndexError(f"(j={j}, k={k}) outside {J} outputs x {K} inputs")
        return float(self.log_p[k, j])

    def __repr__(self) -> str:
        return f"DiscreteChannel(K={self.num_inputs}, J={self.num_outputs}, symmetric={self.symmetric})"


class ContinuousChannel(MemorylessChannel):
    """Finite constellation with additive white Gaussian noise, unit average energy.

    Output integrals run over ``quadrature``; ``log_p[k, g]`` is the log
    density of node g given input k.
    """

    def __init__(self, constellation, es_over_n0: float, quadrature: QuadratureGrid, symmetric: bool = False):
        pts = np.array(constellation, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] not in (1, 2) or pts.shape[0] < 1:
            raise ChannelError("constellation must be K points in 1 or 2 dimensions")
        if not es_over_n0 > 0 or not math.isfinite(es_over_n0):
            raise ChannelError("es_over_n0 must be positive")
        energy = float(np.mean(np.sum(pts**2, axis=1)))
        if abs(energy - 1.0) > ROW_TOL:
            raise ChannelError(f"constellation average energy is {energy!r}, expected 1")
        if quadrature.dim != pts.shape[1]:
            raise ChannelError("quadrature dimension does not match constellation")
        pts.setflags(write=False)
        self.constellation = pts
        self.es_over_n0 = float(es_over_n0)
        self.noise_sigma2 = 1.0 / (2.0 * self.es_over_n0)
        self.quadrature = quadrature
        log_p = self.log_density(quadrature.nodes)
        super().__init__(log_p, quadrature.log_weights, symmetric)

    @property
    def dim(self) -> int:
        return self.constellation.shape[1]

    def log_density(self, y) -> np.ndarray:
        """ln p(y|k) for an array of output points; returns shape (K, len(y))."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if y.shape[1] != self.dim:
            y = y.reshape(-1, self.dim)
        d2 = np.sum((y[None, :, :] - self.constellation[:, None, :]) ** 2, axis=2)
        return -0.5 * d2 / self.noise_sigma2 - 0.5 * self.dim * math.log(2 * math.pi * self.noise_sigma2)

    def log_transition(self, y, k: int) -> float:
        if not 0 <= k < self.num_inputs:
            raise IndexError(f"input index {k} outside {self.num_inputs} inputs")
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.size != self.dim:
            raise ChannelError(f"output point must have {self.dim} coordinates")
        return float(self.log_density(y[None, :])[k, 0])

    def __repr__(self) -> str:
        return (f"ContinuousChannel(K={self.num_inputs}, dim={self.dim}, "
                f"es_over_n0={self.es_over_n0:.6g}, nodes={self.quadrature.size})")


def make_bsc(p: float) -> DiscreteChannel:
    """Binary symmetric channel with crossover probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"crossover probability {p!r} outside [0, 1]")
    return DiscreteChannel([[1 - p, p], [p, 1 - p]], symmetric=True)


def make_z_channel(p: float) -> DiscreteChannel:
    """Z-channel: input 0 is noiseless, input 1 flips to 0 with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"flip probability {p!r} outside [0, 1]")
    return DiscreteChannel([[1.0, 0.0], [p, 1 - p]])


def psk_constellation(M: int) -> np.ndarray:
    if M < 2:
        raise ChannelError("constellation size must be at least 2")
    if M == 2:
        return np.array([[1.0], [-1.0]])
    ang = 2 * np.pi * np.arange(M) / M
    return np.column_stack([np.cos(ang), np.sin(ang)])


def make_mpsk_awgn(M: int, es_over_n0: float, quad_order: int = 96, n_sigma: float = 8.0) -> ContinuousChannel:
    """M-PSK over AWGN with symbol SNR ``es_over_n0`` (linear).

    BPSK uses a 1-D output grid, larger M a 2-D tensor grid. The box covers
    the constellation plus ``n_sigma`` noise deviations; the node count is
    raised above ``quad_order`` when the noise is too narrow to resolve.
    """
    if int(M) != M or M < 2:
        raise ChannelError("constellation size must be an integer >= 2")
    if not es_over_n0 > 0:
        raise ChannelError("es_over_n0 must be positive")
    if quad_order < 16:
        raise ChannelError("quad_order must be at least 16")
    pts = psk_constellation(int(M))
    sigma = math.sqrt(1.0 / (2.0 * es_over_n0))
    half_width = 1.0 + n_sigma * sigma
    order = max(int(quad_order), math.ceil(5.5 * half_width / sigma))
    grid = gauss_legendre_box(pts.shape[1], half_width, order, sigma)
    return ContinuousChannel(pts, es_over_n0, grid, symmetric=True)


def quantize(ch: ContinuousChannel, levels: int) -> DiscreteChannel:
    """Per-dimension uniform quantizer over the channel's quadrature box.

    The outermost bins extend to infinity, so ``levels=2`` is the sign
    quantizer. Bin probabilities are exact Gaussian masses.
    """
    if levels < 2:
        raise ChannelError("need at least 2 quantization levels")
    hw = ch.quadrature.half_width
    edges = np.linspace(-hw, hw, levels + 1)
    edges[0], edges[-1] = -np.inf, np.inf
    if np.any(np.diff(edges[1:-1]) <= 0):
        raise ChannelError("degenerate quantization grid")
    sigma = math.sqrt(ch.noise_sigma2)
    per_dim = []
    for d in range(ch.dim):
        mu = ch.constellation[:, d][:, None]
        lo = (edges[None, :-1] - mu) / sigma
        hi = (edges[None, 1:] - mu) / sigma
        # difference taken in the tail that keeps precision
        upper = lo > 0
        mass = np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
        per_dim.append(np.clip(mass, 0.0, 1.0))
    P = per_dim[0]
    for extra in per_dim[1:]:
        P = (P[:, :, None] * extra[:, None, :]).reshape(ch.num_inputs, -1)
    P = P / P.sum(axis=1, keepdims=True)
    return DiscreteChannel(P)


def read_dmc_file(path) -> DiscreteChannel:
    """Read a DMC from plain text: first line ``K J``, then K rows of J probabilities."""
    with open(path) as fh:
        rows = [line.split() for line in fh if line.strip() and not line.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ChannelError(f"{path}: first line must be 'K J'")
    K, J = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != K or any(len(r) != J for r in body):
        raise ChannelError(f"{path}: expected {K} rows of {J} probabilities")
    return DiscreteChannel([[float(v) for v in r] for r in body])
