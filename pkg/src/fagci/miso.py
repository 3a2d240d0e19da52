"""Multi-user MISO downlink: one-ring channels, per-user GMI and precoder optimization.

User ``k`` receives ``y_k = h_k^H P s + z_k``. Its decoding strategy splits the
other users' streams into an enumerated set and a Gaussian-treated set, which
turns the link into a scalar FAGCI channel with effective alphabets
``c_k X``, ``sum_{l in opt} c_l X`` and ``sum_{l in gauss} c_l X``, where
``c = h_k^H P``.
"""

import itertools
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy import integrate
from scipy.special import logsumexp, softmax

from .channel import FagciChannel, PartialGaussian
from .constellation import Constellation, InvalidArgument
from .rates import LN2, GaussHermite, RateEstimate, SSearch, _clamp, gmi

DEFAULT_TERM_CAP = 1_000_000


class ResourceLimitError(RuntimeError):
    """An enumeration would exceed the configured number of terms."""


# --- channel model ---------------------------------------------------------


@dataclass(frozen=True)
class OneRingConfig:
    n_tx: int
    theta: float
    spread: float

    def __post_init__(self):
        if self.n_tx < 1:
            raise InvalidArgument("n_tx must be >= 1")
        if not 0 < self.spread <= np.pi:
            raise InvalidArgument("angular spread must lie in (0, pi]")


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    matrix: np.ndarray
    factors: np.ndarray
    eigenvalues: np.ndarray

    @property
    def rank(self):
        return self.eigenvalues.size

    @classmethod
    def from_matrix(cls, R, rel_tol=1e-10):
        R = np.asarray(R, dtype=np.complex128)
        R = 0.5 * (R + R.conj().T)
        lam, U = np.linalg.eigh(R)
        lam = np.where(lam < 0, 0.0, lam)
        keep = lam > rel_tol * lam.max()
        return cls(R, U[:, keep], lam[keep])


def one_ring_covariance(cfg):
    """Spatial covariance of a half-wavelength ULA under the one-ring model.

    ``R[m, n] = 1/(2 spread) * int_{theta-spread}^{theta+spread} exp(-j pi (m-n) sin a) da``,
    integrated adaptively per lag (the matrix is Toeplitz).
    """
    lo, hi = cfg.theta - cfg.spread, cfg.theta + cfg.spread
    lags = np.empty(cfg.n_tx, dtype=np.complex128)
    for d in range(cfg.n_tx):
        re, _ = integrate.quad(lambda a: np.cos(np.pi * d * np.sin(a)), lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
        im, _ = integrate.quad(lambda a: -np.sin(np.pi * d * np.sin(a)), lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
        lags[d] = (re + 1j * im) / (2.0 * cfg.spread)
    m = np.arange(cfg.n_tx)
    diff = m[:, None] - m[None, :]
    R = np.where(diff >= 0, lags[np.abs(diff)], np.conj(lags[np.abs(diff)]))
    return CovarianceModel.from_matrix(R)


def sample_channel(cov, rng, size=None):
    """Karhunen-Loeve draw ``h = U Lambda^{1/2} w`` with ``w ~ CN(0, I_r)``.

    Returns shape ``(n_tx,)`` or ``(size, n_tx)``.
    """
    shape = (cov.rank,) if size is None else (size, cov.rank)
    w = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return (w * np.sqrt(cov.eigenvalues)) @ cov.factors.T


# --- strategies and scenarios ----------------------------------------------


@dataclass(frozen=True)
class DecodingStrategy:
    """Per user, which co-user streams are enumerated (``opt``) or Gaussianized (``gauss``)."""

    opt: Tuple[Tuple[int, ...], ...]
    gauss: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.opt) != len(self.gauss):
            raise InvalidArgument("opt and gauss must list every user")
        K = len(self.opt)
        for k in range(K):
            o, g = set(self.opt[k]), set(self.gauss[k])
            if o & g or (o | g) != set(range(K)) - {k}:
                raise InvalidArgument(f"user {k}: opt and gauss must partition the other users")

    @property
    def users(self):
        return len(self.opt)

    @classmethod
    def mi(cls, K):
        """Every user enumerates all co-user streams."""
        return cls(tuple(tuple(l for l in range(K) if l != k) for k in range(K)), tuple(() for _ in range(K)))

    @classmethod
    def full(cls, K):
        """Every user treats all interference as Gaussian."""
        return cls(tuple(() for _ in range(K)), tuple(tuple(l for l in range(K) if l != k) for k in range(K)))

    @classmethod
    def partial_cycle(cls, K):
        """User ``k`` enumerates user ``k+1`` (cyclically) and Gaussianizes the rest."""
        if K < 2:
            return cls.full(K)
        opt = tuple(((k + 1) % K,) for k in range(K))
        gauss = tuple(tuple(l for l in range(K) if l not in (k, (k + 1) % K)) for k in range(K))
        return cls(opt, gauss)

    @classmethod
    def from_name(cls, name, K):
        table = {"mi": cls.mi, "partial-cycle": cls.partial_cycle, "full": cls.full}
        try:
            return table[name](K)
        except KeyError:
            raise InvalidArgument(f"unknown strategy {name!r}; expected one of {sorted(table)}") from None

    def permuted(self, perm):
        """Strategy after relabeling user ``perm[k]`` as user ``k``."""
        inv = {old: new for new, old in enumerate(perm)}
        opt = tuple(tuple(sorted(inv[l] for l in self.opt[perm[k]])) for k in range(self.users))
        gauss = tuple(tuple(sorted(inv[l] for l in self.gauss[perm[k]])) for k in range(self.users))
        return DecodingStrategy(opt, gauss)


@dataclass(frozen=True, eq=False)
class MisoScenario:
    H: np.ndarray
    P: np.ndarray
    constellation: Constellation
    strategy: DecodingStrategy
    noise_var: float
    power_budget: float = np.inf
    term_cap: int = DEFAULT_TERM_CAP

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=np.complex128))
        P = np.asarray(self.P, dtype=np.complex128).reshape(H.shape[1], -1)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "P", P)
        if H.shape[0] != P.shape[1]:
            raise InvalidArgument("H must have one row per precoder column")
        if self.strategy.users != H.shape[0]:
            raise InvalidArgument("strategy user count does not match H")
        if abs(self.constellation.power - 1.0) > 1e-9:
            raise InvalidArgument("MISO streams use a unit-power constellation")
        if not self.noise_var > 0:
            raise InvalidArgument("noise_var must be positive")

    @property
    def users(self):
        return self.H.shape[0]

    def with_precoder(self, P):
        return MisoScenario(self.H, P, self.constellation, self.strategy, self.noise_var,
                            self.power_budget, self.term_cap)


def _symbol_vectors(points, n):
    """All ``|points|^n`` symbol vectors as rows, first stream slowest."""
    rows = list(itertools.product(points, repeat=n))
    return np.array(rows, dtype=np.complex128).reshape(len(rows), n)


def _stream_sum(points, gains):
    """Multiset ``{sum_l gains[l] s_l}`` over all symbol vectors."""
    return _symbol_vectors(points, len(gains)) @ np.asarray(gains, dtype=np.complex128)


def _check_cap(M, n_opt, n_gauss, cap):
    terms = M * M ** n_opt * M ** n_gauss * M * M ** n_opt
    if terms > cap:
        raise ResourceLimitError(f"enumeration needs {terms} terms per noise sample, cap is {cap}")


def effective_channel(sc, k):
    """Scalar FAGCI channel seen by user ``k`` under its decoding strategy."""
    c = sc.H[k] @ sc.P
    opt, gauss = sc.strategy.opt[k], sc.strategy.gauss[k]
    pts = sc.constellation.points
    _check_cap(pts.size, len(opt), len(gauss), sc.term_cap)
    x = Constellation(c[k] * pts)
    i = Constellation(_stream_sum(pts, c[list(opt)]))
    j = Constellation(_stream_sum(pts, c[list(gauss)]))
    return FagciChannel(x, i, j, sc.noise_var)


def user_gmi(sc, k, quad=GaussHermite(), s_search=SSearch()):
    """Exact GMI of user ``k`` (partial-Gaussian metric on its effective channel)."""
    return gmi(effective_channel(sc, k), PartialGaussian(), quad, s_search)


@dataclass(frozen=True)
class SumRate:
    per_user: List[RateEstimate]

    @property
    def total_bits(self):
        return float(sum(r.bits for r in self.per_user))

    @property
    def total_nats(self):
        return float(sum(r.nats for r in self.per_user))


def sum_rate(sc, quad=GaussHermite(), s_search=SSearch()):
    return SumRate([user_gmi(sc, k, quad, s_search) for k in range(sc.users)])


# --- closed-form approximation and its gradient ----------------------------


class _UserTerms:
    """Difference vectors of the closed-form GMI for one user.

    ``v`` rows stack (x - xbar, i - ibar, j) on the user's own, enumerated and
    Gaussian coordinates; ``w`` rows stack (0, i - ibar, j).
    """

    def __init__(self, points, K, k, opt, gauss, cap=DEFAULT_TERM_CAP):
        M = points.size
        _check_cap(M, len(opt), len(gauss), cap)
        self.M = M
        opt, gauss = list(opt), list(gauss)
        ivecs = _symbol_vectors(points, len(opt))
        jvecs = _symbol_vectors(points, len(gauss))
        ni, nj = ivecs.shape[0], jvecs.shape[0]

        # outer (x, i, j), inner (xbar, ibar)
        v = np.zeros((M, ni, nj, M, ni, K), dtype=np.complex128)
        v[..., k] = points[:, None, None, None, None] - points[None, None, None, :, None]
        for col, l in enumerate(opt):
            v[..., l] = ivecs[None, :, None, None, None, col] - ivecs[None, None, None, None, :, col]
        for col, l in enumerate(gauss):
            v[..., l] = jvecs[None, None, :, None, None, col]
        self.v = v.reshape(M * ni * nj, M * ni, K)

        # outer (i, j), inner ibar
        w = np.zeros((ni, nj, ni, K), dtype=np.complex128)
        for col, l in enumerate(opt):
            w[..., l] = ivecs[:, None, None, col] - ivecs[None, None, :, col]
        for col, l in enumerate(gauss):
            w[..., l] = jvecs[None, :, None, col]
        self.w = w.reshape(ni * nj, ni, K)

        self.gauss_mask = np.zeros(K, dtype=bool)
        self.gauss_mask[gauss] = True

    def value(self, c, noise_var):
        denom = np.sum(np.abs(c[self.gauss_mask]) ** 2) + 2.0 * noise_var
        u = self.v @ c
        u2 = self.w @ c
        first = logsumexp(-np.abs(u) ** 2 / denom, axis=1).mean()
        second = logsumexp(-np.abs(u2) ** 2 / denom, axis=1).mean()
        return np.log(self.M) - first + second

    def _grad_term(self, vecs, c, denom, c_gauss):
        u = vecs @ c
        a2 = np.abs(u) ** 2
        p = softmax(-a2 / denom, axis=1)
        # d/d conj(c) of -|u|^2/denom
        d = -(u[..., None] * vecs.conj()) / denom + (a2 / denom ** 2)[..., None] * c_gauss
        return np.einsum("ob,obk->k", p, d) / vecs.shape[0]

    def value_and_grad(self, c, noise_var):
        """Value (nats) and Wirtinger derivative with respect to ``conj(c)``."""
        denom = np.sum(np.abs(c[self.gauss_mask]) ** 2) + 2.0 * noise_var
        c_gauss = np.where(self.gauss_mask, c, 0.0)
        g = -self._grad_term(self.v, c, denom, c_gauss) + self._grad_term(self.w, c, denom, c_gauss)
        return self.value(c, noise_var), g


def _user_terms(sc, k):
    return _UserTerms(sc.constellation.points, sc.users, k, sc.strategy.opt[k], sc.strategy.gauss[k], sc.term_cap)


def user_gmi_approx_nats(sc, k, terms=None):
    terms = terms or _user_terms(sc, k)
    return float(terms.value(sc.H[k] @ sc.P, sc.noise_var))


def user_gmi_approx(sc, k):
    """Closed-form GMI approximation of user ``k`` (tilt fixed to 1)."""
    return RateEstimate(_clamp(user_gmi_approx_nats(sc, k)), s_opt=1.0)


def user_gmi_approx_grad(sc, k, terms=None):
    """Gradient of user ``k``'s approximate GMI (nats) with respect to ``P``.

    Real-linear convention: for a small complex perturbation ``D``,
    ``f(P + D) ~= f(P) + Re(sum(conj(G) * D))``. Equals twice the Wirtinger
    derivative with respect to ``conj(P)``.
    """
    terms = terms or _user_terms(sc, k)
    _, g = terms.value_and_grad(sc.H[k] @ sc.P, sc.noise_var)
    return 2.0 * np.outer(sc.H[k].conj(), g)


# --- Algorithm: barrier gradient ascent ------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    barrier_tau0: float = 1.0
    barrier_multiplier: float = 10.0
    tau_max: float = 1e4
    inner_tol: float = 1e-5
    v_max: int = 500
    shrink: float = 0.5
    sufficient_increase: float = 1e-4
    initial_step: float = 1.0
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.barrier_multiplier > 1:
            raise InvalidArgument("barrier multiplier must be > 1")
        if not self.inner_tol > 0:
            raise InvalidArgument("inner tolerance must be > 0")
        if not 0 < self.shrink < 1:
            raise InvalidArgument("backtracking shrink must lie in (0, 1)")
        if not 0 < self.sufficient_increase < 1:
            raise InvalidArgument("sufficient-increase constant must lie in (0, 1)")
        if not self.barrier_tau0 > 0 or not self.initial_step > 0:
            raise InvalidArgument("tau0 and initial step must be positive")


@dataclass
class OptimizeResult:
    P: np.ndarray
    trace: List[List[float]] = field(default_factory=list)
    iterations: int = 0
    objective_nats: float = 0.0

    @property
    def objective_bits(self):
        return self.objective_nats / LN2


class _SumRateApprox:
    def __init__(self, H, points, strategy, noise_var, cap):
        self.H = H
        self.noise_var = noise_var
        K = H.shape[0]
        self.terms = [_UserTerms(points, K, k, strategy.opt[k], strategy.gauss[k], cap) for k in range(K)]

    def value(self, P):
        C = self.H @ P
        return float(sum(t.value(C[k], self.noise_var) for k, t in enumerate(self.terms)))

    def grad(self, P):
        C = self.H @ P
        G = np.zeros_like(P)
        for k, t in enumerate(self.terms):
            _, g = t.value_and_grad(C[k], self.noise_var)
            G += 2.0 * np.outer(self.H[k].conj(), g)
        return G


def random_precoder(n_tx, K, power_budget, rng, fraction=0.5):
    P = (rng.standard_normal((n_tx, K)) + 1j * rng.standard_normal((n_tx, K))) / np.sqrt(2.0)
    return P * np.sqrt(fraction * power_budget) / np.linalg.norm(P)


def optimize_precoder(H, constellation, strategy, power_budget, noise_var, cfg=OptimizerConfig(), rng=None,
                      P0=None, term_cap=DEFAULT_TERM_CAP):
    """Maximize the approximate sum GMI under ``||P||_F^2 <= P_T`` with a log barrier.

    Inner loop: gradient ascent on ``tau * sum_k I_k(P) + log(P_T - ||P||_F^2)``
    with a backtracking line search; outer loop multiplies ``tau`` until it
    reaches ``tau_max``. Every accepted iterate is strictly feasible and the
    barrier objective never decreases within an inner loop.

    Returns
    -------
    OptimizeResult
        ``trace[m]`` holds the barrier objective after each accepted step of
        the ``m``-th inner loop (first entry is the starting value).
    """
    H = np.atleast_2d(np.asarray(H, dtype=np.complex128))
    K, n_tx = H.shape
    pts = constellation.points
    if abs(constellation.power - 1.0) > 1e-9:
        raise InvalidArgument("MISO streams use a unit-power constellation")
    if P0 is None:
        rng = np.random.default_rng() if rng is None else rng
        P0 = random_precoder(n_tx, K, power_budget, rng)
    P = np.array(P0, dtype=np.complex128).reshape(n_tx, K)
    norm2 = np.sum(np.abs(P) ** 2)
    if norm2 >= power_budget:
        P = P * np.sqrt(0.5 * power_budget / norm2)
    if not np.sum(np.abs(P) ** 2) < power_budget or not np.all(np.isfinite(P)):
        raise InvalidArgument("initial precoder is infeasible")

    model = _SumRateApprox(H, pts, strategy, noise_var, term_cap)

    def barrier_obj(P, tau):
        slack = power_budget - np.sum(np.abs(P) ** 2)
        if slack <= 0:
            return -np.inf
        return tau * model.value(P) + np.log(slack)

    tau = cfg.barrier_tau0
    result = OptimizeResult(P)
    step = cfg.initial_step
    while True:
        omega = barrier_obj(P, tau)
        inner = [omega]
        for _ in range(cfg.v_max):
            slack = power_budget - np.sum(np.abs(P) ** 2)
            direction = tau * model.grad(P) - 2.0 * P / slack
            slope = float(np.sum(np.abs(direction) ** 2))
            step = min(cfg.initial_step, step / cfg.shrink)
            accepted = False
            for _ in range(cfg.max_backtracks):
                cand = P + step * direction
                val = barrier_obj(cand, tau)
                if val >= omega + cfg.sufficient_increase * step * slope:
                    accepted = True
                    break
                step *= cfg.shrink
            if not accepted:
                break
            P, prev, omega = cand, omega, val
            inner.append(omega)
            result.iterations += 1
            if abs(omega - prev) < cfg.inner_tol:
                break
        result.trace.append(inner)
        tau *= cfg.barrier_multiplier
        if tau >= cfg.tau_max:
            break
    result.P = P
    result.objective_nats = model.value(P)
    return result


def finite_difference_grad(f, P, step=1e-5):
    """Central differences of a real function of a complex matrix (real-linear gradient)."""
    P = np.asarray(P, dtype=np.complex128)
    G = np.zeros_like(P)
    for idx in np.ndindex(P.shape):
        for unit in (1.0, 1j):
            E = np.zeros_like(P)
            E[idx] = unit * step
            d = (f(P + E) - f(P - E)) / (2 * step)
            G[idx] += d * unit
    return G
