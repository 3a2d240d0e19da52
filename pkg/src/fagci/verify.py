"""Self-check suite: limit behaviour, matched/GMI consistency, gradients, reductions."""

import numpy as np

from .channel import FagciChannel, Matched, PartialGaussian
from .constellation import Constellation, db_to_linear, make_standard, zero
from .miso import (
    DecodingStrategy, MisoScenario, effective_channel, finite_difference_grad, random_precoder,
    user_gmi, user_gmi_approx_grad, user_gmi_approx_nats,
)
from .rates import GaussHermite, gmi, gmi_approx_nats, mutual_information


def _check(name, value, tolerance, passed):
    return {"name": name, "value": float(value), "tolerance": float(tolerance), "passed": bool(passed)}


def _random_channel(rng):
    kinds = [("QAM", 16), ("QAM", 4), ("PAM", 4), ("PAM", 2)]
    pick = lambda opts: opts[rng.integers(len(opts))]
    x = make_standard(*pick(kinds), db_to_linear(rng.uniform(5, 25)))
    i = make_standard(*pick(kinds[1:]), db_to_linear(rng.uniform(0, 20)))
    j = make_standard(*pick(kinds[1:]), db_to_linear(rng.uniform(0, 20)))
    return FagciChannel(x, i, j, 1.0)


def run_verify(quad=GaussHermite(24), gradient_perturbation=0.0, seed=2024):
    """Run every check; returns ``{"passed": bool, "checks": [...]}``.

    ``gradient_perturbation`` is added to every analytic gradient entry and
    exists so the finite-difference check can be shown to detect errors.
    """
    rng = np.random.default_rng(seed)
    checks = []
    q4 = lambda p: make_standard("QAM", 4, p)
    qam16 = lambda db: make_standard("QAM", 16, db_to_linear(db))

    worst = 0.0
    for _ in range(3):
        ch = _random_channel(rng)
        worst = max(worst, abs(gmi(ch, Matched(), quad, s=1.0).bits - mutual_information(ch, quad).bits))
    checks.append(_check("matched GMI at s=1 equals MI (bits)", worst, 1e-3, worst < 1e-3))

    sj = db_to_linear(15)
    ref = FagciChannel(qam16(20), zero(), q4(sj), 1.0)
    mi_ref = mutual_information(ref, quad).bits
    g_ref = gmi(ref, PartialGaussian(), quad).bits
    for si in (1e6, 1e-6):
        ch = FagciChannel(qam16(20), q4(si), q4(sj), 1.0)
        d_mi = abs(mutual_information(ch, quad).bits - mi_ref)
        d_g = abs(gmi(ch, PartialGaussian(), quad).bits - g_ref)
        checks.append(_check(f"MI saturation at sigma_i^2={si:g} (bits)", d_mi, 0.02, d_mi < 0.02))
        checks.append(_check(f"partial GMI saturation at sigma_i^2={si:g} (bits)", d_g, 0.02, d_g < 0.02))

    ch = FagciChannel(qam16(20), q4(100.0), q4(1e6), 1.0)
    v = gmi(ch, PartialGaussian(), quad).bits
    checks.append(_check("partial GMI vanishes at sigma_j^2=1e6 (bits)", v, 0.05, v < 0.05))

    X = make_standard("QAM", 4, 1.0)
    worst = 0.0
    for name in ("partial-cycle", "full", "mi"):
        for K, n_tx in ((2, 2), (3, 4)):
            H = (rng.standard_normal((K, n_tx)) + 1j * rng.standard_normal((K, n_tx))) / np.sqrt(2)
            sc = MisoScenario(H, random_precoder(n_tx, K, 4.0, rng), X, DecodingStrategy.from_name(name, K), 0.5)
            for k in range(K):
                G = user_gmi_approx_grad(sc, k) + gradient_perturbation
                fd = finite_difference_grad(lambda P: user_gmi_approx_nats(sc.with_precoder(P), k), sc.P)
                worst = max(worst, np.linalg.norm(G - fd) / max(np.linalg.norm(fd), 1e-300))
    checks.append(_check("approximate GMI gradient vs central differences (relative)", worst, 1e-4, worst < 1e-4))

    H = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    P = random_precoder(2, 2, 4.0, rng)
    sc = MisoScenario(H, P, X, DecodingStrategy.full(2), 0.5)
    c = H[0] @ P
    hand = FagciChannel(Constellation(c[0] * X.points), zero(), Constellation(c[1] * X.points), 0.5)
    d = abs(user_gmi(sc, 0, quad).nats - gmi(hand, PartialGaussian(), quad).nats)
    checks.append(_check("MISO user GMI reduces to scalar GMI (nats)", d, 1e-9, d < 1e-9))
    d = abs(user_gmi_approx_nats(sc, 0) - gmi_approx_nats(effective_channel(sc, 0), "partial"))
    checks.append(_check("MISO approximate GMI reduces to scalar form (nats)", d, 1e-9, d < 1e-9))

    return {"passed": all(c["passed"] for c in checks), "checks": checks}
