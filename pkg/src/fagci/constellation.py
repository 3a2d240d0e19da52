"""Finite signal alphabets: standard generators, Minkowski sums, decomposition."""

from dataclasses import dataclass

import numpy as np

_POWER_RTOL = 1e-12


class InvalidArgument(ValueError):
    """Raised when an argument violates an operation's precondition."""


def db_to_linear(x_db):
    """Convert dB relative to unit power into a linear power."""
    if np.ndim(x_db):
        return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)
    return 10.0 ** (float(x_db) / 10.0)


def linear_to_db(x):
    if np.ndim(x):
        return 10.0 * np.log10(np.asarray(x, dtype=float))
    return 10.0 * np.log10(float(x))


def _gray(n):
    return n ^ (n >> 1)


def _gray_inverse(g):
    n = g
    shift = g >> 1
    while shift:
        n ^= shift
        shift >>= 1
    return n


@dataclass(frozen=True, eq=False)
class Constellation:
    """Uniformly weighted multiset of complex points.

    ``points[k]`` carries bit label ``k`` when the generator assigns a
    labeling (``labeled`` is True); Minkowski sums and explicit point lists
    are unlabeled.
    """

    points: np.ndarray
    labeled: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.complex128).reshape(-1)
        if pts.size == 0:
            raise InvalidArgument("constellation must be non-empty")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgument("constellation points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size

    @property
    def power(self):
        """Mean power ``(1/|C|) sum |c|^2``."""
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def is_zero(self):
        return self.points.size == 1 and self.points[0] == 0

    @property
    def bits_per_symbol(self):
        m = len(self)
        if m < 2 or m & (m - 1):
            raise InvalidArgument(f"alphabet of size {m} has no binary labeling")
        return m.bit_length() - 1

    def scaled(self, factor):
        """Points multiplied by a complex factor (labels preserved)."""
        return Constellation(self.points * factor, labeled=self.labeled)

    def with_power(self, power):
        if power < 0:
            raise InvalidArgument("power must be non-negative")
        if self.is_zero:
            return self
        if power == 0:
            return zero()
        return self.scaled(np.sqrt(power / self.power))

    def sorted_points(self):
        """Points in lexicographic (real, imag) order, for multiset comparison."""
        p = self.points
        return p[np.lexsort((p.imag, p.real))]

    def labels(self):
        """Bit matrix ``(|C|, b)``, most significant bit first."""
        b = self.bits_per_symbol
        k = np.arange(len(self))[:, None]
        return (k >> np.arange(b - 1, -1, -1)[None, :]) & 1


def zero():
    """The degenerate alphabet {0}, i.e. an absent signal."""
    return Constellation(np.zeros(1))


def _pam_levels(order):
    # level index n in natural order, label Gray(n)
    return 2.0 * np.arange(order) - (order - 1)


def make_standard(kind, order, power=1.0):
    """Standard uniform alphabet scaled to mean power ``power``.

    Parameters
    ----------
    kind : {"QAM", "PSK", "PAM"}
    order : int
        Alphabet size. QAM needs a perfect square of a power of two per axis
        ordering (4, 16, 64, ...); PSK and PAM any size >= 2.
    power : float
        Target mean power. Zero returns {0}.

    Returns
    -------
    Constellation
        Points ordered by their Gray bit label when the order is a power of
        two (point ``k`` carries label ``k``).
    """
    kind = str(kind).upper()
    order = int(order)
    if power < 0:
        raise InvalidArgument("power must be non-negative")
    pow2 = order >= 2 and not order & (order - 1)

    if kind == "PAM":
        if order < 2:
            raise InvalidArgument("PAM order must be >= 2")
        levels = _pam_levels(order).astype(np.complex128)
        if pow2:
            pts = levels[[_gray_inverse(k) for k in range(order)]]
        else:
            pts = levels
    elif kind == "PSK":
        if order < 2:
            raise InvalidArgument("PSK order must be >= 2")
        if order == 2:
            pts = np.array([-1.0, 1.0], dtype=np.complex128)
        else:
            positions = [_gray_inverse(k) for k in range(order)] if pow2 else range(order)
            pts = np.exp(1j * (np.pi / order + 2 * np.pi * np.asarray(positions, dtype=float) / order))
    elif kind == "QAM":
        side = int(round(np.sqrt(order)))
        if order < 4 or side * side != order or side & (side - 1):
            raise InvalidArgument(f"QAM order must be a square of a power of two, got {order}")
        levels = _pam_levels(side)
        half = side.bit_length() - 1
        pts = np.empty(order, dtype=np.complex128)
        for k in range(order):
            hi, lo = k >> half, k & (side - 1)
            pts[k] = levels[_gray_inverse(hi)] + 1j * levels[_gray_inverse(lo)]
    else:
        raise InvalidArgument(f"unknown constellation kind {kind!r}")

    base = Constellation(pts, labeled=pow2)
    if power == 0:
        return zero()
    return base.with_power(power)


def from_points(points):
    """Explicit constellation from complex values or ``(re, im)`` pairs."""
    arr = np.asarray(points)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    return Constellation(arr)


def minkowski_sum(a, b):
    """Multiset ``{p + q : p in a, q in b}``, ``a``-major order, duplicates kept."""
    return Constellation((a.points[:, None] + b.points[None, :]).reshape(-1))


def minkowski_sum_all(parts):
    out = zero()
    for part in parts:
        out = minkowski_sum(out, part)
    return out


@dataclass(frozen=True)
class Decomposition:
    plus: Constellation
    minus: Constellation
    power_split: float


def _uniform_pam_axis(values, tol=1e-9):
    """Return the unit spacing-half ``d`` if ``values`` is a symmetric uniform PAM."""
    lev = np.sort(np.unique(np.round(values / tol) * tol))
    m = lev.size
    if m < 2 or m & (m - 1):
        return None, m
    d = (np.max(values) - np.min(values)) / (2 * (m - 1))
    expected = d * _pam_levels(m)
    if d <= 0 or np.max(np.abs(lev - expected)) > 1e-8 * max(1.0, abs(lev[-1])):
        return None, m
    return d, m


def _split_axis(d, m, split_index):
    bits = m.bit_length() - 1
    low = min(split_index, bits)
    h = np.arange(1 << (bits - low))
    l_ = np.arange(1 << low)
    plus = d * (2 ** low) * _pam_levels(h.size) if h.size > 1 else np.zeros(1)
    minus = d * _pam_levels(l_.size) if l_.size > 1 else np.zeros(1)
    return plus, minus


def decompose_pam(c, split_index=1):
    """Split a uniform 2^k-PAM or square QAM into a Minkowski sum of smaller ones.

    The lowest ``split_index`` binary digits of each axis level go to
    ``minus``; the rest to ``plus``. For 4-PAM this gives BPSK summands with
    0.8 and 0.2 of the total power.
    """
    if split_index < 1:
        raise InvalidArgument("split_index must be >= 1")
    p = c.points
    if len(c) != len(np.unique(np.round(p, 12))):
        raise InvalidArgument("decomposition needs distinct points")
    real_only = np.max(np.abs(p.imag)) <= 1e-12 * max(1.0, np.max(np.abs(p)))

    if real_only:
        d, m = _uniform_pam_axis(p.real)
        if d is None or m != len(c):
            raise InvalidArgument("not a uniform power-of-two PAM alphabet")
        plus, minus = _split_axis(d, m, split_index)
        plus_c, minus_c = Constellation(plus), Constellation(minus)
    else:
        dr, mr = _uniform_pam_axis(p.real)
        di, mi = _uniform_pam_axis(p.imag)
        if dr is None or di is None or mr != mi or mr * mi != len(c) or abs(dr - di) > 1e-9 * dr:
            raise InvalidArgument("not a uniform square QAM alphabet")
        plus_r, minus_r = _split_axis(dr, mr, split_index)
        plus_c = Constellation((plus_r[:, None] + 1j * plus_r[None, :]).reshape(-1))
        minus_c = Constellation((minus_r[:, None] + 1j * minus_r[None, :]).reshape(-1))
    total = c.power
    split = plus_c.power / total if total > 0 else 1.0
    return Decomposition(plus_c, minus_c, split)
