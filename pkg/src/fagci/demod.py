"""BICM demodulation: symbol posteriors from a decoding metric and bit LLRs."""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .channel import kernel_params
from .constellation import InvalidArgument

LLR_CLAMP = 50.0


@dataclass(frozen=True, eq=False)
class PosteriorVector:
    """Posterior over the input alphabet, aligned with the constellation's point order.

    ``probs`` has shape ``(..., |X|)``; ``log_probs`` keeps the exact log values
    so LLRs stay accurate when probabilities underflow.
    """

    probs: np.ndarray
    log_probs: np.ndarray


def posterior(metric, chan, y):
    """``P(x_k | y)`` proportional to ``q(x_k, y)`` normalized over the alphabet."""
    y = np.asarray(y, dtype=np.complex128)
    offsets, shape, scale = kernel_params(metric, chan)
    table = _kernels.mixture_logsum(y.reshape(-1), chan.x.points, offsets, shape, scale)
    logp = table - logsumexp(table, axis=1, keepdims=True)
    logp = logp.reshape(y.shape + (len(chan.x),))
    return PosteriorVector(np.exp(logp), logp)


def bit_llrs(p, constellation):
    """Bit LLRs ``ln P(b=0) - ln P(b=1)`` for each label bit, clamped to +-50.

    ``p`` is a PosteriorVector or a probability array whose last axis follows
    the constellation's labeled point order (point ``k`` carries label ``k``).
    """
    if isinstance(p, PosteriorVector):
        logp = p.log_probs
    else:
        with np.errstate(divide="ignore"):
            logp = np.log(np.asarray(p, dtype=float))
    m = logp.shape[-1]
    if m < 2 or m & (m - 1):
        raise InvalidArgument(f"LLRs need a power-of-two alphabet, got {m}")
    if m != len(constellation):
        raise InvalidArgument("posterior length does not match the constellation")
    bits = constellation.labels()
    out = np.empty(logp.shape[:-1] + (bits.shape[1],))
    with np.errstate(invalid="ignore"):
        for b in range(bits.shape[1]):
            zero = logsumexp(logp[..., bits[:, b] == 0], axis=-1)
            one = logsumexp(logp[..., bits[:, b] == 1], axis=-1)
            llr = zero - one
            out[..., b] = np.where(np.isnan(llr), 0.0, llr)
    return np.clip(out, -LLR_CLAMP, LLR_CLAMP)
