import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fagci import rates
from fagci.channel import FagciChannel, FullGaussian, GeneralizedGaussian, Matched, PartialGaussian
from fagci.constellation import InvalidArgument, db_to_linear, make_standard, zero
from fagci.rates import GaussHermite, MonteCarlo, SSearch, gmi, gmi_approx, mutual_information, optimize_shape

GH = GaussHermite(40)


def _bi_awgn_bits(a, noise_var):
    """Binary-input MI for +-a in CN(0, noise_var), by 1-D adaptive integration."""
    sd = math.sqrt(noise_var / 2.0)

    def integrand(u):
        y = a + sd * u
        return math.exp(-u * u / 2) / math.sqrt(2 * math.pi) * np.logaddexp(0.0, -4 * a * y / noise_var)

    val, _ = integrate.quad(integrand, -40, 40, epsabs=1e-13, limit=400)
    return 1.0 - val / math.log(2)


def ref_channel(sx_db=20.0, sj_db=10.0):
    return FagciChannel(make_standard("QAM", 16, db_to_linear(sx_db)), make_standard("QAM", 4, 100.0),
                        make_standard("QAM", 4, db_to_linear(sj_db)), 1.0)


class TestQuadrature:
    def test_nodes_validation(self):
        with pytest.raises(InvalidArgument):
            GaussHermite(1)
        with pytest.raises(InvalidArgument):
            MonteCarlo(0)

    @pytest.mark.parametrize("quad", [GaussHermite(10), GaussHermite(40)])
    def test_gh_moments(self, quad):
        z, w = rates.noise_nodes(quad, 3.0)
        assert w.sum() == pytest.approx(1.0, abs=1e-14)
        assert w @ np.abs(z) ** 2 == pytest.approx(3.0, rel=1e-12)
        assert abs(w @ z) < 1e-12
        assert w @ np.abs(z) ** 4 == pytest.approx(2 * 9.0, rel=1e-12)

    def test_mc_reproducible(self):
        a, _ = rates.noise_nodes(MonteCarlo(100, 5), 1.0)
        b, _ = rates.noise_nodes(MonteCarlo(100, 5), 1.0)
        assert np.array_equal(a, b)


class TestMutualInformation:
    def test_zero_input(self):
        ch = FagciChannel(zero(), make_standard("QAM", 4), make_standard("QAM", 4), 1.0)
        assert mutual_information(ch).bits == 0.0

    def test_bpsk_high_snr(self):
        ch = FagciChannel(make_standard("PAM", 2, 1.0), zero(), zero(), 1e-4)
        assert mutual_information(ch, GH).bits == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("snr_db", [-5.0, 0.0, 3.0, 8.0])
    def test_bpsk_against_integration(self, snr_db):
        nz = db_to_linear(-snr_db)
        ch = FagciChannel(make_standard("PAM", 2, 1.0), zero(), zero(), nz)
        assert mutual_information(ch, GH).bits == pytest.approx(_bi_awgn_bits(1.0, nz), abs=1e-5)
        assert mutual_information(ch, GaussHermite(120)).bits == pytest.approx(_bi_awgn_bits(1.0, nz), abs=1e-7)

    @pytest.mark.parametrize("snr_db", [0.0, 6.0])
    def test_qpsk_is_two_bpsk(self, snr_db):
        nz = db_to_linear(-snr_db)
        ch = FagciChannel(make_standard("QAM", 4, 1.0), zero(), zero(), nz)
        # each axis carries amplitude 1/sqrt(2) in per-axis noise nz/2
        expected = 2 * _bi_awgn_bits(1 / math.sqrt(2), nz)
        assert mutual_information(ch, GH).bits == pytest.approx(expected, abs=1e-6)

    def test_golden_reference_point(self):
        mi = mutual_information(ref_channel(25.2), GH)
        assert mi.bits == pytest.approx(3.5742, abs=0.02)
        assert mi.h_joint_bits == pytest.approx(0.4324, abs=0.02)
        assert mi.h_interference_bits == pytest.approx(0.0066, abs=0.003)

    def test_bits_nats_exact(self):
        mi = mutual_information(ref_channel(15.0), GaussHermite(10))
        assert mi.bits == mi.nats / math.log(2)


class TestGmi:
    def test_bracket_validation(self):
        with pytest.raises(InvalidArgument):
            SSearch(2.0, 1.0)

    def test_zero_input(self):
        ch = FagciChannel(zero(), make_standard("QAM", 4), zero(), 1.0)
        for m in (Matched(), PartialGaussian(), FullGaussian()):
            assert gmi(ch, m).nats == 0.0

    def test_matched_at_unit_tilt_is_mi(self):
        ch = ref_channel(18.0)
        assert gmi(ch, Matched(), GH, s=1.0).bits == pytest.approx(mutual_information(ch, GH).bits, abs=1e-10)

    def test_full_equals_matched_without_interference(self):
        ch = FagciChannel(make_standard("QAM", 16, 10.0), zero(), zero(), 1.0)
        assert gmi(ch, FullGaussian(), GH).nats == pytest.approx(gmi(ch, Matched(), GH).nats, abs=1e-14)

    def test_rate_ordering(self):
        ch = ref_channel()
        mi, p, f = mutual_information(ch, GH).bits, gmi(ch, PartialGaussian(), GH).bits, gmi(ch, FullGaussian(), GH).bits
        assert mi > p > f

    def test_crossover_near_17p5(self):
        ch = ref_channel(20.0, 17.5)
        assert gmi(ch, PartialGaussian(), GH).bits < gmi(ch, FullGaussian(), GH).bits

    def test_metric_scaling_invariance(self, monkeypatch):
        ch = ref_channel(17.0)
        base = gmi(ch, PartialGaussian(), GaussHermite(16)).nats
        orig = rates._kernels.mixture_logsum
        monkeypatch.setattr(rates._kernels, "mixture_logsum", lambda *a: orig(*a) + math.log(7.3))
        assert gmi(ch, PartialGaussian(), GaussHermite(16)).nats == pytest.approx(base, abs=1e-9)

    @pytest.mark.parametrize("metric", [PartialGaussian(), FullGaussian(), GeneralizedGaussian(4.0)])
    def test_tilt_objective_unimodal(self, metric):
        obj = rates.gmi_objective(ref_channel(22.0), metric, GaussHermite(16))
        vals = np.array([obj(s) for s in np.linspace(0.01, 4.0, 60)])
        d = np.sign(np.diff(vals))
        d = d[d != 0]
        assert np.sum(d[1:] != d[:-1]) <= 1
        if np.sum(d[1:] != d[:-1]) == 1:
            assert d[0] > 0

    def test_boundary_optimum_is_checked(self):
        # partial metric at very high interference tends to push s towards the lower edge
        obj = rates.gmi_objective(ref_channel(20.0, 40.0), PartialGaussian(), GaussHermite(12))
        est = obj.maximize(SSearch(0.5, 4.0))
        assert est.nats >= obj(0.5) - 1e-15 and est.nats >= obj(4.0) - 1e-15

    def test_negative_value_is_clamped_and_counted(self):
        ch = ref_channel(20.0, 30.0)
        assert rates.gmi_objective(ch, FullGaussian(), GaussHermite(12))(4.0) < 0
        before = rates.clamp_events()
        assert gmi(ch, FullGaussian(), GaussHermite(12), s=4.0).nats == 0.0
        assert rates.clamp_events() == before + 1

    def test_golden_section(self):
        x, fx = rates.golden_section_max(lambda s: -(s - 1.3) ** 2, 0.0, 4.0, 1e-8)
        assert x == pytest.approx(1.3, abs=1e-6)


class TestApproximation:
    def test_zero_input(self):
        ch = FagciChannel(zero(), make_standard("QAM", 4), zero(), 1.0)
        assert gmi_approx(ch, "partial").nats == 0.0
        assert gmi_approx(ch, "full").nats == 0.0

    def test_variants_agree_without_interference(self):
        ch = FagciChannel(make_standard("QAM", 16, 20.0), zero(), zero(), 1.0)
        assert rates.gmi_approx_nats(ch, "partial") == pytest.approx(rates.gmi_approx_nats(ch, "full"), abs=1e-13)

    def test_bad_variant(self):
        with pytest.raises(InvalidArgument):
            gmi_approx(ref_channel(), "both")

    def test_never_negative_on_reference_grid(self):
        for sx in (-10, 0, 10):
            for sj in (10, 20, 40):
                ch = ref_channel(sx, sj)
                assert rates.gmi_approx_nats(ch, "partial") >= 0
                assert rates.gmi_approx_nats(ch, "full") >= 0

    def test_high_snr_saturates(self):
        ch = FagciChannel(make_standard("QAM", 4, 1e4), zero(), zero(), 1.0)
        assert gmi_approx(ch).bits == pytest.approx(2.0, abs=1e-6)


class TestShape:
    def test_beta_star_real_axis_setup(self):
        ch = FagciChannel(make_standard("QAM", 4, db_to_linear(15)), zero(), make_standard("PAM", 4, db_to_linear(8)), 1.0)
        beta, est = optimize_shape(ch, GaussHermite(30), rates.shape_grid(1.0, 10.0, 0.1))
        assert 4.0 <= beta <= 6.5
        assert est.nats >= gmi(ch, FullGaussian(), GaussHermite(30)).nats

    def test_flat_without_j(self):
        ch = FagciChannel(make_standard("QAM", 4, 10.0), zero(), zero(), 1.0)
        vals = [gmi(ch, GeneralizedGaussian(b), GH).bits for b in (1.0, 2.0, 4.0, 8.0)]
        assert max(vals) - min(vals) < 2e-3

    def test_grid_of_two_is_gaussian(self):
        ch = FagciChannel(make_standard("QAM", 4, 30.0), zero(), make_standard("PAM", 4, 6.0), 1.0)
        beta, est = optimize_shape(ch, GaussHermite(20), [2.0])
        assert beta == 2.0
        assert est.nats == pytest.approx(gmi(ch, FullGaussian(), GaussHermite(20)).nats, abs=1e-9)

    @pytest.mark.parametrize("grid", [[], [0.0, 1.0], [60.0]])
    def test_bad_grid(self, grid):
        with pytest.raises(InvalidArgument):
            optimize_shape(ref_channel(), GaussHermite(8), grid)


def _random_channel(rng):
    pick = lambda opts: opts[rng.integers(len(opts))]
    x = make_standard(*pick([("QAM", 4), ("QAM", 16), ("PAM", 4)]), db_to_linear(rng.uniform(0, 20)))
    i = pick([zero(), make_standard("QAM", 4, db_to_linear(rng.uniform(-5, 15)))])
    j = pick([zero(), make_standard("PAM", 2, db_to_linear(rng.uniform(-5, 15))),
              make_standard("QAM", 4, db_to_linear(rng.uniform(-5, 15)))])
    return FagciChannel(x, i, j, 1.0)


def _moderate_channel(rng):
    """Operating points where detection errors are common enough for a 4000-sample MC error bar."""
    pick = lambda opts: opts[rng.integers(len(opts))]
    x = make_standard(*pick([("QAM", 4), ("QAM", 16), ("PAM", 4)]), db_to_linear(rng.uniform(0, 12)))
    i = pick([zero(), make_standard("QAM", 4, db_to_linear(rng.uniform(-5, 10)))])
    j = pick([zero(), make_standard("PAM", 2, db_to_linear(rng.uniform(-5, 10))),
              make_standard("QAM", 4, db_to_linear(rng.uniform(-5, 10)))])
    return FagciChannel(x, i, j, 1.0)


def test_gauss_hermite_agrees_with_monte_carlo():
    """20 random scenarios: |GH - MC| within 3 MC standard errors, for MI and the partial GMI."""
    rng = np.random.default_rng(77)
    for n in range(20):
        ch = _moderate_channel(rng)
        mc = MonteCarlo(4000, seed=n)
        a, b = mutual_information(ch, GaussHermite(40)), mutual_information(ch, mc)
        assert abs(a.bits - b.bits) < 3 * b.std_err_bits
        a, b = gmi(ch, PartialGaussian(), GaussHermite(40), s=1.0), gmi(ch, PartialGaussian(), mc, s=1.0)
        assert abs(a.bits - b.bits) < 3 * b.std_err_bits


def test_gauss_hermite_converges_at_high_snr():
    """Where errors are rare, node refinement (not MC) is the accuracy check."""
    rng = np.random.default_rng(77)
    chans = [_random_channel(rng) for _ in range(20)]
    for n in (7, 12, 16):
        a = mutual_information(chans[n], GaussHermite(40)).bits
        b = mutual_information(chans[n], GaussHermite(80)).bits
        assert abs(a - b) < 2e-5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_rates_are_bounded(seed):
    ch = _random_channel(np.random.default_rng(seed))
    cap = math.log2(len(ch.x)) + 1e-9
    q = GaussHermite(10)
    mi = mutual_information(ch, q).bits
    assert 0 <= mi <= cap
    for m in (Matched(), PartialGaussian(), FullGaussian()):
        # coarse 10-node quadrature: allow its own error on the MI upper bound
        assert 0 <= gmi(ch, m, q).bits <= mi + 1e-3
    for v in ("partial", "full"):
        assert 0 <= gmi_approx(ch, v).bits <= cap
