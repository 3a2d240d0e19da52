"""Hot log-sum-exp kernels with a numba path and a pure-numpy fallback.

Set ``FAGCI_DISABLE_NUMBA=1`` before import to force the numpy path. Both
paths compute identical quantities; the benchmark in ``benchmarks/`` compares
their speed.
"""

import os

import numpy as np
from scipy.special import logsumexp

_CHUNK_ELEMS = 1 << 22


def _env_disabled():
    return os.environ.get("FAGCI_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not _env_disabled()


# --- numpy path ------------------------------------------------------------


def _distance_np(d_re, d_im, shape):
    if shape == 2.0:
        return d_re * d_re + d_im * d_im
    return np.abs(d_re) ** shape + np.abs(d_im) ** shape


def mixture_logsum_np(y, centers, offsets, shape, scale):
    y = np.ascontiguousarray(y, dtype=np.complex128)
    centers = np.ascontiguousarray(centers, dtype=np.complex128)
    offsets = np.ascontiguousarray(offsets, dtype=np.complex128)
    n = y.shape[0]
    out = np.empty((n, centers.shape[0]))
    grid = (centers[:, None] + offsets[None, :])[None, :, :]
    step = max(1, _CHUNK_ELEMS // max(1, grid.size))
    for lo in range(0, n, step):
        d = y[lo:lo + step, None, None] - grid
        dist = _distance_np(d.real, d.imag, shape)
        out[lo:lo + step] = logsumexp(-dist / scale, axis=2)
    return out


def tilted_logsumexp_np(table, s):
    return logsumexp(s * table, axis=1)


# --- numba path ------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _mixture_logsum_nb(y_re, y_im, c_re, c_im, o_re, o_im, shape, scale):
        n = y_re.shape[0]
        na = c_re.shape[0]
        no = o_re.shape[0]
        out = np.empty((n, na))
        buf = np.empty(no)
        gauss = shape == 2.0
        for k in range(n):
            for a in range(na):
                best = np.inf
                for o in range(no):
                    dr = y_re[k] - c_re[a] - o_re[o]
                    di = y_im[k] - c_im[a] - o_im[o]
                    if gauss:
                        dist = dr * dr + di * di
                    else:
                        dist = abs(dr) ** shape + abs(di) ** shape
                    buf[o] = dist
                    if dist < best:
                        best = dist
                acc = 0.0
                for o in range(no):
                    acc += np.exp(-(buf[o] - best) / scale)
                out[k, a] = np.log(acc) - best / scale
        return out

    @numba.njit(cache=True, nogil=True)
    def _tilted_logsumexp_nb(table, s):
        n, na = table.shape
        out = np.empty(n)
        for k in range(n):
            top = -np.inf
            for a in range(na):
                v = s * table[k, a]
                if v > top:
                    top = v
            acc = 0.0
            for a in range(na):
                acc += np.exp(s * table[k, a] - top)
            out[k] = top + np.log(acc)
        return out


def mixture_logsum_nb(y, centers, offsets, shape, scale):
    y = np.asarray(y, dtype=np.complex128)
    centers = np.asarray(centers, dtype=np.complex128)
    offsets = np.asarray(offsets, dtype=np.complex128)
    return _mixture_logsum_nb(
        np.ascontiguousarray(y.real), np.ascontiguousarray(y.imag),
        np.ascontiguousarray(centers.real), np.ascontiguousarray(centers.imag),
        np.ascontiguousarray(offsets.real), np.ascontiguousarray(offsets.imag),
        float(shape), float(scale),
    )


def tilted_logsumexp_nb(table, s):
    return _tilted_logsumexp_nb(np.ascontiguousarray(table, dtype=np.float64), float(s))


# --- dispatch --------------------------------------------------------------


def mixture_logsum(y, centers, offsets, shape, scale):
    """Log of a sum of (generalized) Gaussian kernels for every (y, center) pair.

    ``out[n, a] = log sum_o exp(-(|Re d|^shape + |Im d|^shape) / scale)`` with
    ``d = y[n] - centers[a] - offsets[o]``. For ``shape == 2`` this is the
    plain squared distance ``|d|^2``.
    """
    if USE_NUMBA:
        return mixture_logsum_nb(y, centers, offsets, shape, scale)
    return mixture_logsum_np(y, centers, offsets, shape, scale)


def tilted_logsumexp(table, s):
    """Row-wise ``log sum_a exp(s * table[n, a])``."""
    if USE_NUMBA:
        return tilted_logsumexp_nb(table, s)
    return tilted_logsumexp_np(table, s)
