"""Achievable rates of the FAGCI channel: MI, GMI and their closed-form approximations.

All alphabets are enumerated exactly; only the noise expectation is numerical,
either by tensor-product Gauss-Hermite quadrature or by Monte Carlo. The same
noise nodes are reused for every tilt ``s`` (and every shape ``beta``) so the
objectives are smooth and comparisons are paired.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .channel import FullGaussian, GeneralizedGaussian, kernel_params
from .constellation import InvalidArgument, minkowski_sum

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
MAX_TABLE_ELEMS = 60_000_000

_clamp_events = 0


def clamp_events():
    """Number of negative numerical rates clamped to zero so far in this process."""
    return _clamp_events


def _clamp(nats):
    global _clamp_events
    if nats < 0:
        _clamp_events += 1
        log.debug("clamping negative rate %.3e nats to 0", nats)
        return 0.0
    return float(nats)


# --- quadrature ------------------------------------------------------------


@dataclass(frozen=True)
class GaussHermite:
    nodes: int = 40

    def __post_init__(self):
        if self.nodes < 2:
            raise InvalidArgument("Gauss-Hermite needs >= 2 nodes per axis")


@dataclass(frozen=True)
class MonteCarlo:
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise InvalidArgument("Monte Carlo needs >= 1 sample")


def noise_nodes(quad, noise_var):
    """Nodes ``z`` and weights ``w`` (summing to one) for ``E[f(Z)]``, ``Z ~ CN(0, noise_var)``."""
    if isinstance(quad, GaussHermite):
        t, wt = np.polynomial.hermite.hermgauss(quad.nodes)
        # Re and Im are N(0, noise_var/2): x = sqrt(noise_var) * t
        sd = math.sqrt(noise_var)
        z = sd * (t[:, None] + 1j * t[None, :])
        w = (wt[:, None] * wt[None, :]) / math.pi
        return z.reshape(-1), w.reshape(-1)
    if isinstance(quad, MonteCarlo):
        rng = np.random.default_rng(quad.seed)
        sd = math.sqrt(noise_var / 2.0)
        z = sd * (rng.standard_normal(quad.samples) + 1j * rng.standard_normal(quad.samples))
        return z, np.full(quad.samples, 1.0 / quad.samples)
    raise InvalidArgument(f"unknown quadrature {quad!r}")


# --- results ---------------------------------------------------------------


@dataclass(frozen=True)
class RateEstimate:
    nats: float
    s_opt: Optional[float] = None
    std_err_bits: Optional[float] = None

    @property
    def bits(self):
        return self.nats / LN2


@dataclass(frozen=True)
class MutualInformation(RateEstimate):
    """MI plus its two conditional-entropy terms (nats)."""

    h_joint_nats: float = 0.0
    h_interference_nats: float = 0.0

    @property
    def h_joint_bits(self):
        """``H(X, I, J | Y)`` in bits."""
        return self.h_joint_nats / LN2

    @property
    def h_interference_bits(self):
        """``H(I, J | Y, X)`` in bits."""
        return self.h_interference_nats / LN2


@dataclass(frozen=True)
class SSearch:
    """Golden-section bracket for the tilt ``s`` and its relative tolerance."""

    lower: float = 1e-3
    upper: float = 4.0
    rtol: float = 1e-4

    def __post_init__(self):
        if self.upper < self.lower:
            raise InvalidArgument("s bracket upper bound below lower bound")
        if self.lower < 0:
            raise InvalidArgument("s must be non-negative")


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a, b, rtol=1e-4):
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``.

    Stops once the bracket is narrower than ``rtol * max(|x|, a-b scale)``.
    Bracket end points are also compared so boundary optima are returned.
    """
    if b < a:
        raise InvalidArgument("bracket upper bound below lower bound")
    if b == a:
        return a, f(a)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rtol * max(abs(c), abs(d), 1e-12):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    best = max(((c, fc), (d, fd)), key=lambda p: p[1])
    return best


# --- engines ---------------------------------------------------------------


def _received(base, z):
    return (base[:, None] + z[None, :]).reshape(-1)


def _weighted_mean(values, w, n_tuples):
    """Mean over tuples and quadrature over noise of a flat ``(T*N,)`` array."""
    per_node = values.reshape(n_tuples, -1).mean(axis=0)
    return float(per_node @ w), per_node


def _std_err(per_node, quad):
    if not isinstance(quad, MonteCarlo) or per_node.size < 2:
        return None
    return float(np.std(per_node, ddof=1) / math.sqrt(per_node.size) / LN2)


def _sum_entropy(points, z, w, noise_var):
    """``E[log sum_{p'} exp(-(|p + Z - p'|^2 - |Z|^2) / noise_var)]`` over uniform ``p``."""
    y = _received(points, z)
    table = _kernels.mixture_logsum(y, np.zeros(1, dtype=np.complex128), points, 2.0, noise_var)[:, 0]
    table = table + np.tile(np.abs(z) ** 2 / noise_var, points.size)
    return _weighted_mean(table, w, points.size)


def mutual_information(chan, quad=GaussHermite()):
    """Constellation-constrained MI ``log|X| - H(X,I,J|Y) + H(I,J|Y,X)``.

    Both conditional entropies are computed over the sum constellations
    ``X+I+J`` and ``I+J`` and are returned alongside the rate.
    """
    if len(chan.x) == 1:
        return MutualInformation(0.0, h_joint_nats=0.0, h_interference_nats=0.0)
    z, w = noise_nodes(quad, chan.noise_var)
    joint, _ = chan.tuples
    h1, g1 = _sum_entropy(joint, z, w, chan.noise_var)
    h2, g2 = _sum_entropy(minkowski_sum(chan.i, chan.j).points, z, w, chan.noise_var)
    nats = math.log(len(chan.x)) - h1 + h2
    return MutualInformation(
        _clamp(nats), s_opt=None, std_err_bits=_std_err(g1 - g2, quad),
        h_joint_nats=h1, h_interference_nats=h2,
    )


class GmiObjective:
    """The GMI objective as a function of the tilt ``s`` on fixed noise nodes.

    Holds the table ``log q(xbar, x + i + j + z)`` for every tuple, node and
    candidate ``xbar``; each evaluation costs one row-wise log-sum-exp.
    """

    def __init__(self, x_points, base, x_idx, offsets, shape, scale, z, w):
        self.n_x = x_points.size
        self.n_tuples = base.size
        self.w = w
        size = base.size * z.size * x_points.size
        if size > MAX_TABLE_ELEMS:
            raise MemoryError(f"GMI table of {size} entries exceeds {MAX_TABLE_ELEMS}")
        y = _received(base, z)
        self.table = _kernels.mixture_logsum(y, x_points, offsets, shape, scale)
        true = self.table[np.arange(y.size), np.repeat(x_idx, z.size)]
        self.true_mean, self.true_per_node = _weighted_mean(true, w, base.size)

    def per_node(self, s):
        lse = _kernels.tilted_logsumexp(self.table, s)
        _, lse_node = _weighted_mean(lse, self.w, self.n_tuples)
        return lse_node - s * self.true_per_node

    def __call__(self, s):
        return math.log(self.n_x) - float(self.per_node(s) @ self.w)

    def maximize(self, s_search=SSearch(), s=None, quad=None):
        if s is not None:
            s_best, value = float(s), self(float(s))
        else:
            s_best, value = golden_section_max(self, s_search.lower, s_search.upper, s_search.rtol)
            for edge in (s_search.lower, s_search.upper):
                v = self(edge)
                if v > value:
                    s_best, value = edge, v
        err = _std_err(self.per_node(s_best), quad) if quad is not None else None
        return RateEstimate(_clamp(value), s_opt=float(s_best), std_err_bits=err)


def gmi_objective(chan, metric, quad=GaussHermite()):
    """Build the tilt objective for ``chan`` and ``metric``."""
    offsets, shape, scale = kernel_params(metric, chan)
    z, w = noise_nodes(quad, chan.noise_var)
    base, x_idx = chan.tuples
    return GmiObjective(chan.x.points, base, x_idx, offsets, shape, scale, z, w)


def gmi(chan, metric, quad=GaussHermite(), s_search=SSearch(), s=None):
    """Generalized mutual information maximized over the tilt ``s``.

    Parameters
    ----------
    chan : FagciChannel
    metric : decoding metric instance
    quad : GaussHermite or MonteCarlo
    s_search : SSearch
        Bracket and tolerance of the golden-section search.
    s : float, optional
        Evaluate at this fixed tilt instead of searching.
    """
    if len(chan.x) == 1:
        return RateEstimate(0.0, s_opt=1.0 if s is None else float(s))
    return gmi_objective(chan, metric, quad).maximize(s_search, s=s, quad=quad)


def gmi_approx_nats(chan, variant="partial"):
    """Closed-form GMI approximation (tilt fixed to 1), unclamped, in nats."""
    if len(chan.x) == 1:
        return 0.0
    sx, si, sj = chan.powers
    sz = chan.noise_var
    base, _ = chan.tuples
    x_pts = chan.x.points
    zero = np.zeros(1, dtype=np.complex128)
    ij = minkowski_sum(chan.i, chan.j).points
    if variant == "partial":
        denom = sj + 2.0 * sz
        first = _kernels.mixture_logsum(base, zero, minkowski_sum(chan.x, chan.i).points, 2.0, denom)[:, 0]
        second = _kernels.mixture_logsum(ij, zero, chan.i.points, 2.0, denom)[:, 0]
    elif variant == "full":
        denom = si + sj + 2.0 * sz
        first = _kernels.mixture_logsum(base, zero, x_pts, 2.0, denom)[:, 0]
        second = -np.abs(ij) ** 2 / denom
    else:
        raise InvalidArgument(f"approximation variant must be 'partial' or 'full', got {variant!r}")
    return math.log(len(chan.x)) - float(first.mean()) + float(second.mean())


def gmi_approx(chan, variant="partial"):
    """Closed-form GMI approximation for the partial- or full-Gaussian metric."""
    return RateEstimate(_clamp(gmi_approx_nats(chan, variant)), s_opt=1.0)


def shape_grid(lower=0.5, upper=10.0, step=0.1):
    n = int(math.floor((upper - lower) / step + 1e-9)) + 1
    return np.round(lower + step * np.arange(n), 10)


def optimize_shape(chan, quad=GaussHermite(), grid=None, s_search=SSearch()):
    """Exhaustive search of the generalized Gaussian shape maximizing the GMI.

    Returns ``(beta_opt, RateEstimate)``. Ties keep the first grid value.
    """
    grid = shape_grid() if grid is None else np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise InvalidArgument("shape grid is empty")
    if np.any(grid <= 0) or np.any(grid > 50):
        raise InvalidArgument("shape grid must lie in (0, 50]")
    best_beta, best = None, None
    for beta in grid:
        est = gmi(chan, GeneralizedGaussian(float(beta)), quad, s_search)
        if best is None or est.nats > best.nats:
            best_beta, best = float(beta), est
    return best_beta, best

