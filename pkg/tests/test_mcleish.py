import math

import mpmath as mp
import numpy as np
import pytest
from scipy import special
from scipy.integrate import quad

from mdsense.mcleish import (
    DegenerateInputError,
    McLeishParams,
    fit_params,
    pdf_real_component,
    pdf_reference_form,
    real_moment,
    sample_ccs,
    sample_real,
)


def _integrate(f, upper=np.inf):
    # split at 1 so the (possibly singular) origin gets its own panel
    a, _ = quad(f, 0, 1, epsabs=1e-13, epsrel=1e-12, limit=400)
    b, _ = quad(f, 1, upper, epsabs=1e-13, epsrel=1e-12, limit=400)
    return 2 * (a + b)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            McLeishParams(0.0, 1.0)
        with pytest.raises(ValueError):
            McLeishParams(1.0, -1.0)
        with pytest.raises(ValueError):
            McLeishParams(1.0, math.nan)

    @pytest.mark.parametrize("v", [0.5, 1.0, 3.0, 40.0])
    def test_kurtosis_inverts(self, v):
        p = McLeishParams(2.0, v)
        assert p.kurtosis == pytest.approx(3 + 3 / v)
        assert McLeishParams.from_kurtosis(2.0, p.kurtosis).non_gaussianity == pytest.approx(v)

    def test_gaussian_limit(self):
        assert McLeishParams.from_kurtosis(1.0, 3.0).is_gaussian
        assert McLeishParams.from_kurtosis(1.0, 2.5).is_gaussian


class TestDensity:
    def test_laplacian_case(self):
        p = McLeishParams(1.0, 1.0)
        for x in (0.1, 0.7, 2.0, -1.3):
            assert pdf_real_component(x, p) == pytest.approx(math.exp(-2 * abs(x)), rel=1e-12)

    def test_mixture_oracle(self):
        # integrate the Gaussian density against the Gamma mixer directly
        p = McLeishParams(1.4, 2.3)
        tau = 0.7 / 2.3
        for x in (0.05, 0.9, 3.0):
            f = lambda g: math.exp(-g - special.gammaln(2.3) + 1.3 * math.log(g)) * math.exp(
                -x * x / (2 * tau * g)
            ) / math.sqrt(2 * math.pi * tau * g)
            oracle, _ = quad(f, 0, np.inf, epsabs=0, epsrel=1e-12, limit=400)
            assert pdf_real_component(x, p) == pytest.approx(oracle, rel=1e-9)

    @pytest.mark.parametrize("v", [0.5, 1.0, 3.0])
    def test_normalisation(self, v):
        p = McLeishParams(1.0, v)
        assert abs(_integrate(lambda x: pdf_real_component(x, p)) - 1.0) <= 1e-6

    @pytest.mark.parametrize("v", [0.5, 1.0, 3.0])
    @pytest.mark.parametrize("var", [1.0, 2.5])
    def test_second_moment(self, v, var):
        p = McLeishParams(var, v)
        m2 = _integrate(lambda x: x * x * pdf_real_component(x, p))
        assert abs(m2 - var / 2) <= 1e-6

    def test_fourth_moment_matches_closed_form(self):
        p = McLeishParams(1.0, 3.0)
        m4 = _integrate(lambda x: x**4 * pdf_real_component(x, p))
        assert m4 == pytest.approx(real_moment(4, 0.5, 3.0), rel=1e-8)

    def test_origin(self):
        with pytest.raises(ValueError):
            pdf_real_component(0.0, McLeishParams(1.0, 0.5))
        for v in (0.8, 3.0):
            p = McLeishParams(1.0, v)
            assert pdf_real_component(0.0, p) == pytest.approx(pdf_real_component(1e-9, p), rel=1e-5)

    def test_large_v_is_gaussian(self):
        p = McLeishParams(2.0, 2000.0)
        xs = np.linspace(-3, 3, 13)
        gauss = np.exp(-xs**2 / 2) / math.sqrt(2 * math.pi)
        assert np.allclose(pdf_real_component(xs, p), gauss, atol=2e-3)

    def test_vectorised(self):
        p = McLeishParams(1.0, 2.0)
        xs = np.array([[0.5, 1.0], [1.5, 2.0]])
        out = pdf_real_component(xs, p)
        assert out.shape == (2, 2)
        assert out[0, 1] == pdf_real_component(1.0, p)


class TestReferenceForm:
    def test_bessel_k0_shape_at_v1(self):
        p = McLeishParams(1.0, 1.0)
        for x in (0.1, 0.7, 2.0, -1.3):
            expected = 2 / (math.sqrt(2) * math.pi) * float(mp.besselk(0, math.sqrt(2) * abs(x)))
            assert pdf_reference_form(x, p) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("v,total", [(1.0, 1.0), (2.0, 0.5), (3.0, 0.25)])
    def test_integral(self, v, total):
        # closed form 4 sqrt(v) 2^(v-2) (2v)^(-v/2) sqrt(pi) Gamma(v-1/2) / (sqrt(2) pi Gamma(v))
        got = _integrate(lambda x: pdf_reference_form(x, McLeishParams(1.0, v)))
        assert got == pytest.approx(total, rel=1e-8)

    def test_origin(self):
        with pytest.raises(ValueError):
            pdf_reference_form(0.0, McLeishParams(1.0, 1.0))
        p = McLeishParams(1.0, 3.0)
        assert pdf_reference_form(0.0, p) == pytest.approx(pdf_reference_form(1e-7, p), rel=1e-6)


class TestRealMoment:
    def test_examples(self):
        assert real_moment(2, 0.5, 1.0) == pytest.approx(0.5)
        assert real_moment(4, 0.5, 1.0) == pytest.approx(1.5)
        assert real_moment(0, 3.0, 7.0) == 1.0
        assert real_moment(3, 1.0, 1.0) == 0.0

    def test_negative_order(self):
        with pytest.raises(ValueError):
            real_moment(-2, 1.0, 1.0)

    @pytest.mark.parametrize("n", [2, 4, 6, 8, 10, 16])
    @pytest.mark.parametrize("v", [0.5, 1.0, 2.0, 5.0, 100.0])
    def test_gamma_form(self, n, v):
        s = 0.7
        expected = float(
            (2 * mp.mpf(s) / v) ** (n / 2) * mp.gamma(v + n / 2) * mp.gamma((n + 1) / 2) / (mp.gamma(v) * mp.gamma(0.5))
        )
        assert real_moment(n, s, v) == pytest.approx(expected, rel=1e-12)

    def test_gaussian(self):
        assert real_moment(8, 2.0, math.inf) == 105 * 16


class TestSampler:
    def test_deterministic(self):
        p = McLeishParams(1.0, 0.7)
        assert np.array_equal(sample_ccs(p, 1000, 42), sample_ccs(p, 1000, 42))
        assert not np.array_equal(sample_ccs(p, 1000, 42), sample_ccs(p, 1000, 43))

    def test_count_validation(self):
        with pytest.raises(ValueError):
            sample_ccs(McLeishParams(1.0, 1.0), 0, 1)

    @pytest.mark.slow
    @pytest.mark.parametrize("v", [0.5, 1.0, 2.0, 5.0])
    def test_moment_law(self, v):
        w = sample_ccs(McLeishParams(1.0, v), 10**7, 1000 + int(10 * v))
        p = np.abs(w) ** 2
        m2 = p.mean()
        assert abs(m2 - 1.0) <= 0.01
        assert abs(np.mean(p * p) / m2**2 / (2 + 3 / (2 * v)) - 1) <= 0.02

    def test_gaussian_limit_kurtosis(self):
        w = sample_ccs(McLeishParams(2.0, 1e6), 10**6, 5)
        x = w.real
        assert abs(np.mean(x**4) / np.mean(x**2) ** 2 / 3 - 1) <= 0.02
        assert np.mean(x**2) == pytest.approx(1.0, rel=0.01)

    def test_quadratures_independent(self):
        w = sample_ccs(McLeishParams(1.0, 1.0), 2 * 10**6, 9)
        # shared mixer would give E[x^2 y^2] = (1 + 1/v) E[x^2]^2
        ratio = np.mean(w.real**2 * w.imag**2) / (np.mean(w.real**2) * np.mean(w.imag**2))
        assert abs(ratio - 1) < 0.03

    def test_sample_real_variance(self):
        x = sample_real(McLeishParams(1.0, 2.0), 10**6, 3, component_variance=4.0)
        assert np.var(x) == pytest.approx(4.0, rel=0.02)

    def test_gamma_mixer_is_exact(self):
        # the mixer's law is checked against the Gamma CDF directly (small shape)
        rng = np.random.default_rng(1)
        g = rng.gamma(0.3, 1.0, 200_000)
        qs = np.array([0.01, 0.1, 0.5, 1.0, 2.0])
        emp = np.array([(g <= q).mean() for q in qs])
        assert np.allclose(emp, special.gammainc(0.3, qs), atol=4e-3)


class TestFit:
    @pytest.mark.slow
    def test_round_trip(self):
        w = sample_ccs(McLeishParams(1.0, 1.0), 10**7, 77)
        fit = fit_params(w)
        assert fit.variance == pytest.approx(1.0, rel=0.02)
        assert fit.non_gaussianity == pytest.approx(1.0, rel=0.10)

    def test_gaussian_sentinel(self):
        w = sample_ccs(McLeishParams(1.0, math.inf), 10**5, 3)
        # unit-modulus samples have quadrature kurtosis 1.5, far below 3
        assert fit_params(np.exp(1j * np.linspace(0, 6, 100))).is_gaussian
        fit = fit_params(w)
        assert fit.is_gaussian or fit.non_gaussianity > 20

    def test_zero_buffer(self):
        with pytest.raises(DegenerateInputError):
            fit_params(np.zeros(16, complex))

    def test_too_short(self):
        with pytest.raises(ValueError):
            fit_params(np.ones(3, complex))
