import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from fagci.channel import (
    FagciChannel, FullGaussian, GeneralizedGaussian, InterferenceDecomposition, Matched, PartialGaussian,
    generalized_gaussian_scale, kernel_params, log_metric, parse_metric, sample_output,
)
from fagci.constellation import Decomposition, InvalidArgument, decompose_pam, make_standard, zero


def _chan(sx=100.0, si=100.0, sj=10.0, nz=1.0):
    return FagciChannel(make_standard("QAM", 16, sx), make_standard("QAM", 4, si), make_standard("QAM", 4, sj), nz)


def _direct(metric, ch, x, y):
    """Plain-loop evaluation of each metric's formula, independent of the kernel."""
    sx, si, sj = ch.powers
    nz = ch.noise_var
    if isinstance(metric, Matched):
        terms = [-abs(y - ii - jj - x) ** 2 / nz for ii in ch.i.points for jj in ch.j.points]
    elif isinstance(metric, PartialGaussian):
        terms = [-abs(y - ii - x) ** 2 / (sj + nz) for ii in ch.i.points]
    elif isinstance(metric, FullGaussian):
        terms = [-abs(y - x) ** 2 / (si + sj + nz)]
    elif isinstance(metric, GeneralizedGaussian):
        b = metric.shape
        alpha = np.sqrt((sj + nz) * gamma(1 / b) / (2 * gamma(3 / b)))
        terms = [-((abs((y - ii - x).real) / alpha) ** b + (abs((y - ii - x).imag) / alpha) ** b)
                 for ii in ch.i.points]
    else:
        d = metric.decomposition
        terms = [-abs(y - ii - jp - x) ** 2 / (d.minus.power + nz) for ii in ch.i.points for jp in d.plus.points]
    terms = np.array(terms)
    m = terms.max()
    return m + np.log(np.sum(np.exp(terms - m)))


class TestConstruction:
    def test_rejects_nonpositive_noise(self):
        with pytest.raises(InvalidArgument):
            FagciChannel(make_standard("QAM", 4), zero(), zero(), 0.0)

    @pytest.mark.parametrize("beta", [0.0, -1.0])
    def test_rejects_bad_shape(self, beta):
        with pytest.raises(InvalidArgument):
            GeneralizedGaussian(beta)

    def test_powers(self):
        sx, si, sj = _chan().powers
        assert (sx, si, sj) == pytest.approx((100.0, 100.0, 10.0), rel=1e-12)
        assert FagciChannel.single(make_standard("QAM", 4), zero(), 1.0).powers[1] == 0.0

    def test_decomposition_must_match_j(self):
        bad = InterferenceDecomposition(decompose_pam(make_standard("QAM", 16, 10.0)))
        with pytest.raises(InvalidArgument):
            kernel_params(bad, _chan())


class TestLogMetric:
    def test_full_gaussian_origin(self):
        ch = FagciChannel(make_standard("QAM", 4), zero(), zero(), 1.0)
        assert log_metric(FullGaussian(), ch, 0.0, 0.0) == 0.0

    @pytest.mark.parametrize("metric", [Matched(), PartialGaussian(), FullGaussian(), GeneralizedGaussian(1.3),
                                        GeneralizedGaussian(5.1)])
    def test_against_direct_formula(self, metric):
        ch = _chan()
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.choice(ch.x.points)
            y = x + 12 * (rng.standard_normal() + 1j * rng.standard_normal())
            assert log_metric(metric, ch, x, y) == pytest.approx(_direct(metric, ch, x, y), rel=1e-12, abs=1e-10)

    def test_decomposition_against_direct(self):
        ch = FagciChannel(make_standard("QAM", 4, 10.0), zero(), make_standard("QAM", 16, 50.0), 1.0)
        m = InterferenceDecomposition.of(ch.j)
        for y in (0.3 + 2j, -7 + 1j, 11 - 4j):
            assert log_metric(m, ch, ch.x.points[1], y) == pytest.approx(_direct(m, ch, ch.x.points[1], y), rel=1e-12)

    def test_metrics_coincide_without_interference(self):
        ch = FagciChannel(make_standard("QAM", 16, 30.0), zero(), zero(), 2.0)
        x = ch.x.points[:, None]
        y = np.linspace(-8, 8, 10)[None, :] + 1j * np.linspace(-5, 7, 10)[:, None].T
        a = log_metric(Matched(), ch, x, y)
        np.testing.assert_allclose(log_metric(PartialGaussian(), ch, x, y), a, rtol=1e-13)
        np.testing.assert_allclose(log_metric(FullGaussian(), ch, x, y), a, rtol=1e-13)

    def test_beta_two_is_gaussian_shift(self):
        """Shape 2 differs from the Gaussian metric by a constant only."""
        ch = FagciChannel(make_standard("QAM", 4, 30.0), zero(), make_standard("PAM", 4, 6.0), 1.0)
        yy = np.linspace(-10, 10, 10)
        y = (yy[:, None] + 1j * yy[None, :]).reshape(-1)
        x = ch.x.points[0]
        diff = log_metric(GeneralizedGaussian(2.0), ch, x, y) - log_metric(FullGaussian(), ch, x, y)
        assert np.max(np.abs(diff - diff.mean())) < 1e-10

    def test_beta_two_with_i_equals_partial(self):
        ch = _chan()
        y = np.linspace(-20, 20, 100) * (1 + 0.3j)
        diff = log_metric(GeneralizedGaussian(2.0), ch, ch.x.points[3], y) - log_metric(PartialGaussian(), ch, ch.x.points[3], y)
        assert np.max(np.abs(diff - diff.mean())) < 1e-10

    def test_trivial_decomposition_is_matched(self):
        ch = _chan()
        dec = Decomposition(ch.j, zero(), 1.0)
        y = np.array([1 + 2j, -30 + 4j, 7.5 - 0.1j])
        np.testing.assert_allclose(log_metric(InterferenceDecomposition(dec), ch, ch.x.points[5], y),
                                   log_metric(Matched(), ch, ch.x.points[5], y), rtol=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.3, 8))
    def test_finite_everywhere(self, re, im, beta):
        ch = _chan()
        for m in (Matched(), PartialGaussian(), FullGaussian(), GeneralizedGaussian(beta)):
            assert np.isfinite(log_metric(m, ch, ch.x.points[0], complex(re, im)))


def test_generalized_gaussian_scale_variance():
    """Per-axis variance alpha^2 Gamma(3/b)/Gamma(1/b) equals half the total."""
    for b in (0.7, 2.0, 5.1):
        a = generalized_gaussian_scale(11.0, b)
        assert a ** 2 * gamma(3 / b) / gamma(1 / b) == pytest.approx(5.5, rel=1e-12)
    assert generalized_gaussian_scale(2.0, 2.0) ** 2 == pytest.approx(2.0, rel=1e-14)


class TestParse:
    @pytest.mark.parametrize("name,cls", [("matched", Matched), ("partial", PartialGaussian), ("full", FullGaussian),
                                          ("ggauss:5.1", GeneralizedGaussian), ("decomp", InterferenceDecomposition)])
    def test_names(self, name, cls):
        ch = FagciChannel(make_standard("QAM", 4), zero(), make_standard("QAM", 16), 1.0)
        assert isinstance(parse_metric(name, ch), cls)

    @pytest.mark.parametrize("name", ["bogus", "ggauss:x", "decomp:y"])
    def test_bad_names(self, name):
        with pytest.raises(InvalidArgument):
            parse_metric(name, _chan())


class TestSampling:
    def test_reproducible(self):
        ch = _chan()
        a = sample_output(ch, np.random.default_rng(9), 100)
        b = sample_output(ch, np.random.default_rng(9), 100)
        for u, v in zip(a, b):
            assert np.array_equal(u, v)

    def test_noise_statistics(self):
        ch = FagciChannel(make_standard("QAM", 4, 1.0), zero(), zero(), 2.0)
        x, i, j, y = sample_output(ch, np.random.default_rng(0), 200_000)
        z = y - x - i - j
        assert np.var(z.real) == pytest.approx(1.0, rel=0.02)
        assert np.var(z.imag) == pytest.approx(1.0, rel=0.02)
        assert abs(np.mean(z.real * z.imag)) < 0.01
