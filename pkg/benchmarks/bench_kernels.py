"""Compare the numba and numpy kernel paths, alone and inside full rate evaluations.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. The numba
kernels are warmed up (compiled) before timing.
"""

import argparse
import time

import numpy as np

from fagci import _kernels
from fagci.channel import FagciChannel, GeneralizedGaussian, PartialGaussian
from fagci.constellation import make_standard
from fagci.rates import GaussHermite, gmi, mutual_information


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases():
    rng = np.random.default_rng(0)
    z = GaussHermite(40)
    n_nodes = z.nodes ** 2
    for label, n_tuples, n_centers, n_offsets, shape in (
        ("MI joint entropy (16QAM+QPSK+QPSK)", 256, 1, 256, 2.0),
        ("GMI table, partial metric", 256, 16, 4, 2.0),
        ("GMI table, generalized Gaussian", 64, 4, 1, 5.1),
    ):
        y = 10 * (rng.standard_normal(n_tuples * n_nodes) + 1j * rng.standard_normal(n_tuples * n_nodes))
        c = rng.standard_normal(n_centers) + 1j * rng.standard_normal(n_centers)
        o = rng.standard_normal(n_offsets) + 1j * rng.standard_normal(n_offsets)
        yield label, (y, c, o, shape, 11.0)


def end_to_end(repeat):
    ch = FagciChannel(make_standard("QAM", 16, 100.0), make_standard("QAM", 4, 100.0),
                      make_standard("QAM", 4, 10.0), 1.0)
    ch_gg = FagciChannel(make_standard("QAM", 4, 31.6), make_standard("QAM", 4, 0.0),
                         make_standard("QAM", 16, 100.0), 1.0)
    cases = {
        "mutual_information GH40": lambda: mutual_information(ch, GaussHermite(40)),
        "gmi partial GH40": lambda: gmi(ch, PartialGaussian(), GaussHermite(40)),
        "gmi ggauss(5.1) GH40": lambda: gmi(ch_gg, GeneralizedGaussian(5.1), GaussHermite(40)),
    }
    rows = []
    for label, fn in cases.items():
        res = {}
        for flag in (True, False):
            _kernels.USE_NUMBA = flag
            fn()
            res[flag] = best_of(fn, repeat)
        rows.append((label, res[True], res[False]))
    _kernels.USE_NUMBA = _kernels.numba is not None
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'case':<40}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for label, a in kernel_cases():
        _kernels.mixture_logsum_nb(*a)
        t_nb = best_of(lambda: _kernels.mixture_logsum_nb(*a), args.repeat)
        t_np = best_of(lambda: _kernels.mixture_logsum_np(*a), args.repeat)
        err = np.max(np.abs(_kernels.mixture_logsum_nb(*a) - _kernels.mixture_logsum_np(*a)))
        print(f"{label:<40}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x   max|diff| {err:.1e}")
    for label, t_nb, t_np in end_to_end(args.repeat):
        print(f"{label:<40}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
