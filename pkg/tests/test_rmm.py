import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from tworv.errors import BranchError, ConsistencyError, DomainError, ParameterError
from tworv.rmm import (
    NORMAL_L,
    RmmParams,
    Standardization,
    destandardize,
    mode_density,
    normalizer,
    preset,
    quadrature_moment,
    raw_moment,
    raw_moment_complex,
    rmm_cdf,
    rmm_pdf,
    rmm_ppf,
    standardize,
    standardized_mean_and_square,
    standardized_variance,
    unit_variance_L,
)

SQRT_2PI = math.sqrt(2 * math.pi)


class TestPdf:
    def test_exponential_mode(self):
        assert rmm_pdf(0.0, preset("exponential")) == pytest.approx(1.0, rel=1e-14)

    def test_exponential_at_one(self):
        assert rmm_pdf(1.0, preset("exponential")) == pytest.approx(0.3678794412, rel=1e-10)

    def test_normal_peak(self):
        assert rmm_pdf(0.0, preset("normal")) == pytest.approx(1 / SQRT_2PI, rel=1e-12)

    def test_zero_below_support(self):
        assert rmm_pdf(-0.5, preset("exponential")) == 0.0

    def test_vectorized(self):
        z = np.linspace(0, 5, 11)
        np.testing.assert_allclose(rmm_pdf(z, preset("exponential")), np.exp(-z), rtol=1e-13)

    def test_pareto_limit(self):
        p = preset("pareto", alpha=3.0)
        assert rmm_pdf(2.0, p) == pytest.approx(2.0 * 2.0 ** -3.0, rel=1e-12)
        assert rmm_pdf(0.5, p) == 0.0

    def test_principal_branch_rejects_non_integer_power_left_of_mode(self):
        p = RmmParams.make(1.0, 1.5, 0.0, branch="principal")
        p = RmmParams(1.0, 1.5, 1.0, p.kappa, "principal")
        with pytest.raises(DomainError):
            rmm_pdf(-0.5, p)


class TestModeDensity:
    def test_exponential(self):
        assert mode_density(preset("exponential")) == pytest.approx(1.0, rel=1e-14)

    def test_normal(self):
        assert mode_density(preset("normal")) == pytest.approx(0.3989422804, rel=1e-10)

    def test_uniform(self):
        assert mode_density(preset("uniform")) == 1.0


class TestStandardization:
    s = Standardization(5.0, 2.0)

    @pytest.mark.parametrize("x, z", [(5.0, 0.0), (7.0, 1.0), (3.0, -1.0)])
    def test_examples(self, x, z):
        assert standardize(x, self.s) == z
        assert destandardize(z, self.s) == x

    @given(st.floats(-1e6, 1e6))
    def test_inverse(self, x):
        assert destandardize(standardize(x, self.s), self.s) == pytest.approx(x, abs=1e-9)

    def test_sigma_positive(self):
        with pytest.raises(ParameterError):
            Standardization(0.0, 0.0)


class TestNormalizer:
    def test_exponential(self):
        assert normalizer(1, 1, 0) == pytest.approx(1 / math.e, rel=1e-14)

    def test_normal(self):
        assert normalizer(1, 2, 40) == pytest.approx(0.2419707245, rel=1e-9)

    def test_uniform_convention(self):
        assert normalizer(0, 1.7, 0) == 1.0

    @pytest.mark.parametrize("alpha, lam, L", [(0.5, 1.3, 0.0), (2.0, 1.7, 1.2), (1.0, 3.5, 4.0),
                                               (3.0, 0.4, 2.0)])
    def test_integrates_to_one(self, alpha, lam, L):
        kappa = normalizer(alpha, lam, L)
        assert quadrature_moment(0, RmmParams(alpha, lam, L, kappa)) == pytest.approx(1, abs=1e-9)

    def test_principal_branch_residue_is_reported(self):
        with pytest.raises(BranchError, match="imaginary residue"):
            normalizer(1.0, 4 / 3, 2.0, branch="principal")

    def test_principal_agrees_with_even_on_half_line(self):
        assert normalizer(1.3, 1.7, 0.0, branch="principal") == pytest.approx(
            normalizer(1.3, 1.7, 0.0), rel=1e-13)

    def test_consistency_check(self, monkeypatch):
        import tworv.rmm as rmm

        monkeypatch.setattr(rmm, "quadrature_moment", lambda k, p: 1.01)
        with pytest.raises(ConsistencyError):
            rmm.normalizer(1.0, 1.5, 1.0)

    @pytest.mark.parametrize("alpha, lam, L", [(-1.0, 1.0, 0.0), (1.0, 4.5, 0.0), (1.0, 1.0, -1.0)])
    def test_box(self, alpha, lam, L):
        with pytest.raises(ParameterError):
            normalizer(alpha, lam, L)


class TestRawMoment:
    @pytest.mark.parametrize("k, expected", [(0, 1.0), (1, 1.0), (2, 2.0), (3, 6.0), (4, 24.0)])
    def test_exponential(self, k, expected):
        assert raw_moment(k, 1, 1, 0) == pytest.approx(expected, rel=1e-12)

    def test_normal_symmetric(self):
        assert abs(raw_moment(1, 1, 2, 40)) <= 1e-8
        assert raw_moment(4, 1, 2, 40) == pytest.approx(3.0, rel=1e-12)

    def test_rejects_bad_order(self):
        with pytest.raises(ParameterError):
            raw_moment(-1, 1, 1, 0)

    @settings(max_examples=25, deadline=None)
    @given(
        st.floats(0.2, 3.0), st.floats(0.5, 3.5), st.floats(0.0, 5.0), st.integers(0, 4),
    )
    def test_closed_form_matches_quadrature(self, alpha, lam, L, k):
        closed = raw_moment(k, alpha, lam, L, verify=False)
        kappa = normalizer(alpha, lam, L, verify=False)
        quad = quadrature_moment(k, RmmParams(alpha, lam, L, kappa))
        assert closed == pytest.approx(quad, rel=1e-7, abs=1e-9)

    def test_even_branch_is_real(self):
        assert raw_moment_complex(3, 1.2, 5 / 3, 2.0).imag == pytest.approx(0.0, abs=1e-12)

    def test_principal_branch_is_complex_off_half_line(self):
        assert abs(raw_moment_complex(1, 1.0, 5 / 3, 0.5, branch="principal").imag) > 1e-9

    def test_pareto_moments(self):
        assert raw_moment(1, 3.0, 0.0, 0.0) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            raw_moment(2, 3.0, 0.0, 0.0)


class TestStandardizedMoments:
    def test_exponential(self):
        m1, m2 = standardized_mean_and_square(1, 1, 0)
        assert (m1, m2) == (pytest.approx(1.0), pytest.approx(2.0))
        assert m2 == pytest.approx(1 + m1 ** 2)

    def test_normal(self):
        m1, m2 = standardized_mean_and_square(1, 2, NORMAL_L)
        assert m1 == pytest.approx(0.0, abs=1e-12)
        assert m2 == pytest.approx(1.0, rel=1e-12)

    def test_unit_variance_L(self):
        L = unit_variance_L(1.0, 1.5)
        assert L == pytest.approx(1.9131285910758993, rel=1e-9)
        assert standardized_variance(1.0, 1.5, L) == pytest.approx(1.0, abs=1e-6)

    def test_unit_variance_unreachable(self):
        # 2 - lambda weighting with lambda = 1.9 never gets down to unit variance
        with pytest.raises(ParameterError, match="no L"):
            unit_variance_L(0.1, 1.9)


class TestPresets:
    def test_exponential(self):
        p = preset("exponential")
        assert (p.alpha, p.lam, p.L) == (1, 1, 0)
        assert p.kappa == pytest.approx(1 / math.e)

    def test_normal(self):
        p = preset("normal")
        assert (p.alpha, p.lam, p.L) == (1, 2, 40)
        assert p.kappa == pytest.approx(0.24197, rel=1e-5)

    def test_uniform(self):
        p = preset("uniform")
        assert (p.alpha, p.L, p.kappa) == (0, 0, 1)
        assert p.support == (0.0, 1.0)

    @pytest.mark.parametrize("name, alpha", [("pareto", 1.0), ("pareto", 0.5), ("power", 1.0),
                                             ("power", 1.5), ("pareto", None)])
    def test_alpha_constraints(self, name, alpha):
        with pytest.raises(ParameterError):
            preset(name, alpha)

    def test_power_function_is_a_density(self):
        p = preset("power", alpha=0.4)
        assert p.support == (0.0, 1.0)
        assert quadrature_moment(0, p) == pytest.approx(1.0, rel=1e-8)

    def test_unknown(self):
        with pytest.raises(ParameterError):
            preset("lognormal")


class TestCdfPpf:
    def test_exponential(self):
        z = np.linspace(0, 10, 50)
        np.testing.assert_allclose(rmm_cdf(z, preset("exponential")), stats.expon.cdf(z),
                                   atol=1e-14)

    def test_normal(self):
        z = np.linspace(-6, 6, 50)
        np.testing.assert_allclose(rmm_cdf(z, preset("normal")), stats.norm.cdf(z), atol=1e-14)

    @pytest.mark.parametrize("alpha, lam, L", [(0.5, 1.5, 1.0), (1.0, 1.2, 0.3), (2.0, 3.0, 2.0)])
    def test_ppf_inverts_cdf(self, alpha, lam, L):
        p = RmmParams.make(alpha, lam, L)
        q = np.linspace(0.001, 0.999, 37)
        np.testing.assert_allclose(rmm_cdf(rmm_ppf(q, p), p), q, atol=1e-12)

    def test_cdf_matches_quadrature(self):
        from scipy import integrate

        p = RmmParams.make(0.5, 1.5, 1.0)
        val = integrate.quad(lambda z: rmm_pdf(z, p), -1.0, 0.7, points=[0.0],
                             epsabs=1e-15, epsrel=1e-13)[0]
        assert rmm_cdf(0.7, p) == pytest.approx(val, abs=1e-12)
