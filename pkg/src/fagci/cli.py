"""Command-line front end: ``fagci rates sweep | miso optimize | demod posterior | verify``.

Powers in config files are given in dB relative to unit linear power, so a
noise level of 0 dB means variance 1. Only ratios enter the rate formulas.
"""

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import rates
from .channel import parse_metric
from .config import (
    ConfigError, build_channel, load_toml, parse_constellation, parse_optimizer, parse_quadrature,
    parse_s_search, parse_sweep,
)
from .constellation import InvalidArgument, db_to_linear
from .demod import bit_llrs, posterior
from .miso import (
    DecodingStrategy, MisoScenario, OneRingConfig, ResourceLimitError, one_ring_covariance,
    optimize_precoder, sample_channel, sum_rate,
)
from .verify import run_verify

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_RUNTIME = 0, 1, 2, 3

SWEEP_HEADER = ["param_db", "metric", "bits", "std_err", "s_opt"]


class RunError(RuntimeError):
    """An engine failure during a batch run, tagged with where it happened."""


def fmt(v):
    """17 significant digits, enough to round-trip any double."""
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return "nan"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _evaluate(chan, metric, cfg):
    if metric == "mi":
        est = rates.mutual_information(chan, cfg.quad)
        return est.bits, est.std_err_bits, float("nan")
    if metric.startswith("approx:"):
        return rates.gmi_approx(chan, metric.split(":", 1)[1]).bits, 0.0, 1.0
    if metric == "ggauss:opt":
        _, est = rates.optimize_shape(chan, cfg.quad, s_search=cfg.s_search)
        return est.bits, est.std_err_bits, est.s_opt
    est = rates.gmi(chan, parse_metric(metric, chan), cfg.quad, cfg.s_search)
    return est.bits, est.std_err_bits, est.s_opt


def validate_metrics(cfg):
    chan = cfg.channel_at(cfg.grid[0])
    for m in cfg.metrics:
        if m in ("mi", "approx:partial", "approx:full", "ggauss:opt"):
            continue
        try:
            parse_metric(m, chan)
        except InvalidArgument as exc:
            raise ConfigError(f"metric {m!r}: {exc}") from None


def run_sweep(cfg, threads=1):
    """Rows ``(param_db, metric, bits, std_err, s_opt)`` in grid order, one per grid point and metric."""
    validate_metrics(cfg)

    def point(value):
        chan = cfg.channel_at(value)
        out = []
        for m in cfg.metrics:
            try:
                out.append((value, m) + tuple(_evaluate(chan, m, cfg)))
            except (InvalidArgument, ResourceLimitError, MemoryError, FloatingPointError) as exc:
                raise RunError(f"grid point {value} dB, metric {m}: {exc}") from exc
        return out

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        blocks = list(pool.map(point, cfg.grid))
    return [row for block in blocks for row in block]


# --- MISO --------------------------------------------------------------------


def parse_miso(data, seed=None):
    try:
        n_tx, K = int(data["n_tx"]), int(data["K"])
        constellation = parse_constellation(data.get("constellation", {"kind": "QAM", "order": 4}))
        ring = OneRingConfig(n_tx, float(data.get("theta", np.pi / 3)), float(data.get("spread", np.pi / 6)))
        budgets = data.get("power_budget_db", 10.0)
        budgets = [float(b) for b in (budgets if isinstance(budgets, list) else [budgets])]
        strategy = DecodingStrategy.from_name(str(data.get("strategy", "partial-cycle")), K)
        evaluate = DecodingStrategy.from_name(str(data.get("evaluate_strategy", data.get("strategy", "partial-cycle"))), K)
    except KeyError as exc:
        raise ConfigError(f"missing key {exc}") from None
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if abs(constellation.power - 1.0) > 1e-9:
        raise ConfigError("MISO constellation must be unit power; scale with power_budget_db")
    draws = int(data.get("draws", 1))
    if draws < 1:
        raise ConfigError("draws must be >= 1")
    return {
        "n_tx": n_tx, "K": K, "constellation": constellation, "ring": ring, "budgets": budgets,
        "noise_var": db_to_linear(float(data.get("noise_db", 0.0))), "strategy": strategy,
        "evaluate": evaluate, "draws": draws, "seed": int(data.get("seed", 0) if seed is None else seed),
        "optimizer": parse_optimizer(data.get("optimizer")),
        "quad": parse_quadrature(data.get("quadrature", {"nodes": 20})),
        "s_search": parse_s_search(data.get("s_search")),
    }


def miso_draw(cfg, cov, budget_db, d):
    """Optimize and evaluate one channel draw; seeds depend only on the draw index."""
    seed = cfg["seed"] + d
    H = sample_channel(cov, np.random.default_rng(seed), size=cfg["K"])
    res = optimize_precoder(H, cfg["constellation"], cfg["strategy"], db_to_linear(budget_db), cfg["noise_var"],
                            cfg["optimizer"], rng=np.random.default_rng([seed, 7]))
    sc = MisoScenario(H, res.P, cfg["constellation"], cfg["evaluate"], cfg["noise_var"])
    sr = sum_rate(sc, cfg["quad"], cfg["s_search"])
    return [budget_db, d, seed, res.objective_bits, sr.total_bits] + [r.bits for r in sr.per_user] + [res.iterations]


def run_miso(cfg, threads=1):
    cov = one_ring_covariance(cfg["ring"])
    header = ["power_budget_db", "draw", "seed", "objective_bits", "sum_rate_bits"]
    header += [f"rate_user{k + 1}" for k in range(cfg["K"])] + ["iterations"]
    rows = []
    for b in cfg["budgets"]:
        def task(d, b=b):
            try:
                return miso_draw(cfg, cov, b, d)
            except (InvalidArgument, ResourceLimitError, MemoryError) as exc:
                raise RunError(f"power {b} dB, draw {d}: {exc}") from exc

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            block = list(pool.map(task, range(cfg["draws"])))
        rows.extend(block)
        data = np.array([r[3:] for r in block], dtype=float)
        rows.append([b, "mean", ""] + list(data.mean(axis=0)))
    return header, rows


# --- demod ---------------------------------------------------------------------


def run_demod(data, base_dir):
    if "channel" not in data:
        raise ConfigError("missing [channel] table")
    chan = build_channel(data["channel"])
    try:
        metric = parse_metric(data.get("metric", "matched"), chan)
    except InvalidArgument as exc:
        raise ConfigError(f"metric: {exc}") from None
    if "input" not in data:
        raise ConfigError("missing input (CSV with y_re, y_im columns)")
    path = Path(data["input"])
    if not path.is_absolute():
        path = base_dir / path
    try:
        with path.open(newline="") as fh:
            rdr = csv.DictReader(fh)
            y = np.array([complex(float(r["y_re"]), float(r["y_im"])) for r in rdr])
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: bad row ({exc})") from None
    post = posterior(metric, chan, y)
    M = len(chan.x)
    with_llr = M >= 2 and not M & (M - 1)
    header = ["y_re", "y_im"] + [f"p_{k}" for k in range(M)]
    llr = None
    if with_llr:
        llr = bit_llrs(post, chan.x)
        header += [f"llr_{b}" for b in range(llr.shape[1])]
    rows = []
    for n in range(len(y)):
        row = [y[n].real, y[n].imag] + list(post.probs[n])
        if llr is not None:
            row += list(llr[n])
        rows.append(row)
    return header, rows


# --- plumbing ------------------------------------------------------------------


def render_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise RunError(f"cannot write {out}: {exc}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="fagci", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker threads (results keep grid order)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default=None, help="output path (default: stdout or the config's output)")
    sub = p.add_subparsers(dest="group", required=True)
    r = sub.add_parser("rates").add_subparsers(dest="action", required=True)
    r.add_parser("sweep", parents=[common], help="rate curves over a dB grid").add_argument("config")
    m = sub.add_parser("miso").add_subparsers(dest="action", required=True)
    m.add_parser("optimize", parents=[common], help="precoder optimization over channel draws").add_argument("config")
    d = sub.add_parser("demod").add_subparsers(dest="action", required=True)
    d.add_parser("posterior", parents=[common], help="posteriors and LLRs for received samples").add_argument("config")
    sub.add_parser("verify", parents=[common], help="run the self-check suite, print a JSON report")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.group == "verify":
            report = run_verify()
            _emit(json.dumps(report, indent=2) + "\n", args.out)
            return EXIT_OK if report["passed"] else EXIT_CHECK
        data = load_toml(args.config)
        out = args.out or data.get("output")
        if args.group == "rates":
            cfg = parse_sweep(data, args.seed)
            text = render_csv(SWEEP_HEADER, run_sweep(cfg, args.threads))
        elif args.group == "miso":
            text = render_csv(*run_miso(parse_miso(data, args.seed), args.threads))
        else:
            text = render_csv(*run_demod(data, Path(args.config).parent))
        _emit(text, out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RunError, InvalidArgument, ResourceLimitError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
