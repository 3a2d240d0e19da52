"""Scalar finite-alphabet Gaussian channel under interference and its decoding metrics.

The channel is ``y = x + i + j + z`` with ``x, i, j`` uniform over finite
alphabets and ``z ~ CN(0, noise_var)``. Every decoding metric is evaluated in
the natural-log domain; constant normalization factors are dropped since they
never change a decision or a GMI value.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .constellation import Constellation, Decomposition, InvalidArgument, decompose_pam, minkowski_sum, zero


@dataclass(frozen=True, eq=False)
class FagciChannel:
    x: Constellation
    i: Constellation
    j: Constellation
    noise_var: float

    def __post_init__(self):
        if not self.noise_var > 0:
            raise InvalidArgument("noise_var must be positive")

    @classmethod
    def single(cls, x, j, noise_var):
        """Channel with one interferer (``i = {0}``)."""
        return cls(x, zero(), j, noise_var)

    @property
    def powers(self):
        return self.x.power, self.i.power, self.j.power

    @property
    def tuples(self):
        """Noise-free outputs ``x + i + j`` of every ``(x, i, j)``, x-major, and x indices."""
        nx, ni, nj = len(self.x), len(self.i), len(self.j)
        base = (self.x.points[:, None, None] + self.i.points[None, :, None] + self.j.points[None, None, :])
        x_idx = np.repeat(np.arange(nx), ni * nj)
        return base.reshape(-1), x_idx


# --- metrics ---------------------------------------------------------------


@dataclass(frozen=True)
class Matched:
    """True likelihood: both interferers enumerated."""

    name = "matched"


@dataclass(frozen=True)
class PartialGaussian:
    """``i`` enumerated, ``j`` replaced by a Gaussian of matching variance."""

    name = "partial"


@dataclass(frozen=True)
class FullGaussian:
    """Both interferers replaced by a single Gaussian."""

    name = "full"


@dataclass(frozen=True)
class GeneralizedGaussian:
    """``i`` enumerated; per-axis generalized Gaussian for ``j + z`` with shape ``beta``."""

    shape: float

    def __post_init__(self):
        if not self.shape > 0:
            raise InvalidArgument("generalized Gaussian shape must be > 0")

    @property
    def name(self):
        return f"ggauss:{self.shape:g}"


@dataclass(frozen=True, eq=False)
class InterferenceDecomposition:
    """``i`` and ``j_plus`` enumerated, ``j_minus`` treated as Gaussian."""

    decomposition: Decomposition
    label: str = "decomp"

    @classmethod
    def of(cls, j, split_index=1):
        return cls(decompose_pam(j, split_index), label=f"decomp:{split_index}")

    @property
    def name(self):
        return self.label


DecodingMetric = (Matched, PartialGaussian, FullGaussian, GeneralizedGaussian, InterferenceDecomposition)


def generalized_gaussian_scale(variance, shape):
    """Scale ``alpha`` such that each real axis carries ``variance / 2``."""
    return float(np.sqrt(0.5 * variance * np.exp(gammaln(1.0 / shape) - gammaln(3.0 / shape))))


def _check_decomposition(dec, j):
    rebuilt = minkowski_sum(dec.plus, dec.minus).points
    tol = 1e-10 * max(1.0, float(np.max(np.abs(j.points))))
    ok = len(rebuilt) == len(j)
    if ok:
        dist = np.abs(rebuilt[:, None] - j.points[None, :])
        nearest = np.argmin(dist, axis=1)
        ok = np.all(dist[np.arange(len(rebuilt)), nearest] <= tol) and len(np.unique(nearest)) == len(j)
    if not ok:
        raise InvalidArgument("decomposition does not reproduce the channel's j alphabet")


def kernel_params(metric, chan):
    """Reduce a metric on ``chan`` to ``(offsets, shape, scale)`` for the log-sum kernel.

    ``log q(x, y) = log sum_o exp(-dist(y - x - o, shape) / scale)``.
    """
    sx, si, sj = chan.powers
    sz = chan.noise_var
    if isinstance(metric, Matched):
        return minkowski_sum(chan.i, chan.j).points, 2.0, sz
    if isinstance(metric, PartialGaussian):
        return chan.i.points, 2.0, sj + sz
    if isinstance(metric, FullGaussian):
        return np.zeros(1, dtype=np.complex128), 2.0, si + sj + sz
    if isinstance(metric, GeneralizedGaussian):
        beta = float(metric.shape)
        alpha = generalized_gaussian_scale(sj + sz, beta)
        return chan.i.points, beta, alpha ** beta
    if isinstance(metric, InterferenceDecomposition):
        dec = metric.decomposition
        _check_decomposition(dec, chan.j)
        return minkowski_sum(chan.i, dec.plus).points, 2.0, dec.minus.power + sz
    raise InvalidArgument(f"unknown decoding metric {metric!r}")


def log_metric(metric, chan, x, y):
    """Natural log of ``q(x, y)``; ``x`` and ``y`` broadcast against each other."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.complex128), np.asarray(y, dtype=np.complex128))
    offsets, shape, scale = kernel_params(metric, chan)
    diff = (y - x).reshape(-1)
    out = _kernels.mixture_logsum(diff, np.zeros(1, dtype=np.complex128), offsets, shape, scale)[:, 0]
    out = out.reshape(x.shape)
    return float(out) if out.ndim == 0 else out


def parse_metric(name, chan=None):
    """Metric from its config name: matched | partial | full | ggauss:<beta> | decomp:<split>."""
    key = str(name).strip().lower()
    if key == "matched":
        return Matched()
    if key == "partial":
        return PartialGaussian()
    if key == "full":
        return FullGaussian()
    if key.startswith("ggauss:"):
        try:
            beta = float(key.split(":", 1)[1])
        except ValueError:
            raise InvalidArgument(f"bad generalized Gaussian shape in {name!r}") from None
        return GeneralizedGaussian(beta)
    if key.startswith("decomp"):
        split = 1
        if ":" in key:
            try:
                split = int(key.split(":", 1)[1])
            except ValueError:
                raise InvalidArgument(f"bad split index in {name!r}") from None
        if chan is None:
            raise InvalidArgument("decomposition metric needs the channel's j alphabet")
        return InterferenceDecomposition.of(chan.j, split)
    raise InvalidArgument(f"unknown metric {name!r}")


def sample_output(chan, rng, size=None):
    """Draw ``(x, i, j, y)`` from the channel.

    ``rng`` is a ``numpy.random.Generator``; the same seed gives the same
    draws. Noise is circular: real and imaginary parts each get half of
    ``noise_var``.
    """
    x = rng.choice(chan.x.points, size=size)
    i = rng.choice(chan.i.points, size=size)
    j = rng.choice(chan.j.points, size=size)
    sd = np.sqrt(chan.noise_var / 2.0)
    z = sd * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
    return x, i, j, x + i + j + z
