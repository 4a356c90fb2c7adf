import math

import numpy as np
import pytest
from scipy import integrate

from tworv.bivariate import (
    BivariateParams,
    joint_pdf,
    marginal_cdf_w,
    marginal_pdf_w,
    model_mean,
    model_var,
    sample_w,
    two_moment_variance,
    u_moments,
    u_pdf,
    v_moments,
)
from tworv.errors import NumericalError, ParameterError

BASE = BivariateParams(1.5, 1.0, 1.0, 0.1)


def joint_exponent_kappa(p):
    """Normalizer of the joint density by 2-D quadrature of its kernel."""
    def kernel(z2, z1):
        t1 = (p.alpha1 / p.lam) * (abs(z1) ** p.lam - 1.0)
        return math.exp(-t1 - 0.5 * p.alpha2 * (z2 * z2 - 1.0))

    total = 0.0
    for a, b in ((-p.L1, 0.0), (0.0, 60.0)):
        total += integrate.dblquad(kernel, a, b, -p.L2, 12.0, epsabs=1e-12, epsrel=1e-11)[0]
    return 1.0 / total


class TestParams:
    @pytest.mark.parametrize(
        "args",
        [(0.9, 1, 1, 0.1), (2.1, 1, 1, 0.1), (1.5, -1, 1, 0.1), (1.5, 1, 0, 0.1),
         (1.5, 1, 1, 0.0), (1.5, 1, 1, 0.2)],
    )
    def test_validation(self, args):
        with pytest.raises(ParameterError):
            BivariateParams(*args)

    def test_component_identifications(self):
        p = BivariateParams(1.7, 2.0, 0.4, 0.08)
        assert p.alpha1 == pytest.approx(0.3)
        assert p.L1 == pytest.approx(5.0)
        assert p.L2 == pytest.approx(12.5)
        assert p.alpha2 == 1.0
        assert BivariateParams(1.7, 2.0, 0.4, 0.08, "lambda").alpha2 == pytest.approx(0.7)

    def test_improper_components(self):
        with pytest.raises(ParameterError, match="improper"):
            BivariateParams(2.0, 1.0, 1.0, 0.1).require_proper()
        with pytest.raises(ParameterError, match="improper"):
            BivariateParams(1.0, 1.0, 1.0, 0.1, "lambda").require_proper()


class TestJointPdf:
    @pytest.mark.parametrize("weight, exponent", [("lambda", 7 / 12), ("unit", 5 / 6)])
    def test_value_at_modes(self, weight, exponent):
        p = BivariateParams(1.5, 1.0, 1.0, 0.1, weight)
        kappa = joint_exponent_kappa(p)
        assert joint_pdf(0.0, 0.0, p) == pytest.approx(kappa * math.exp(exponent), rel=1e-8)

    def test_outside_support(self):
        assert joint_pdf(-1.5, 0.0, BASE) == 0.0
        assert joint_pdf(0.0, -11.0, BASE) == 0.0


class TestMarginal:
    def test_integrates_to_one(self):
        mass = integrate.quad(lambda w: marginal_pdf_w(w, BASE), 0, 40, limit=200,
                              points=[1.0, 2.0])[0]
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_degenerate_error_recovers_u(self):
        p = BivariateParams(1.0, 1.0, 1.0, 1e-6)
        for w in (0.3, 1.0, 2.5):
            assert marginal_pdf_w(w, p) == pytest.approx(u_pdf(w, p), abs=1e-4)

    def test_negative_w(self):
        assert marginal_pdf_w(-1.0, BASE) == 0.0

    def test_cdf_monotone_and_bounded(self):
        grid = np.linspace(0.0, 20.0, 41)
        cdf = marginal_cdf_w(grid, BASE)
        assert cdf[0] == 0.0
        assert np.all(np.diff(cdf) >= 0)
        assert cdf[-1] == pytest.approx(1.0, abs=1e-6)

    def test_cdf_grid_validation(self):
        with pytest.raises(ParameterError):
            marginal_cdf_w([1.0, 0.5], BASE)

    def test_non_convergence_reported(self, monkeypatch):
        import tworv.bivariate as bv

        def fake(*a, **k):
            return 0.0, 1.0, {"last": 500}, "limit"

        monkeypatch.setattr(bv.integrate, "quad", fake)
        with pytest.raises(NumericalError, match="subintervals"):
            bv.marginal_pdf_w(1.0, BASE)


class TestSampling:
    def test_deterministic(self):
        a = sample_w(BASE, 1000, seed=7)
        b = sample_w(BASE, 1000, seed=7)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample_w(BASE, 1000, seed=8))

    def test_empty(self):
        assert sample_w(BASE, 0, seed=1).size == 0

    def test_non_negative(self):
        assert np.all(sample_w(BivariateParams(1.0, 0.0, 1.0, 1 / 6), 10000, 3) >= 0)

    def test_moments_within_3se(self):
        n = 200_000
        w = sample_w(BASE, n, seed=11)
        mean, var = model_mean(BASE), model_var(BASE)
        assert abs(w.mean() - mean) < 3 * math.sqrt(var / n)
        m4 = np.mean((w - w.mean()) ** 4)
        assert abs(w.var(ddof=1) - var) < 3 * math.sqrt((m4 - var ** 2) / n)


class TestMoments:
    def test_two_moment_variance_examples(self):
        assert two_moment_variance(1.0, 1.0, 0.1) == pytest.approx(1.02)
        assert two_moment_variance(3.0, 0.7, 0.0) == pytest.approx(0.49)

    def test_model_mean_is_mean_of_u(self):
        assert model_mean(BASE) == pytest.approx(1.783673614075465, rel=1e-12)

    def test_model_var_against_marginal_quadrature(self):
        m1 = integrate.quad(lambda w: w * marginal_pdf_w(w, BASE), 0, 40, points=[1, 2])[0]
        m2 = integrate.quad(lambda w: w * w * marginal_pdf_w(w, BASE), 0, 40, points=[1, 2])[0]
        assert m1 == pytest.approx(model_mean(BASE), rel=1e-7)
        assert m2 - m1 ** 2 == pytest.approx(model_var(BASE), rel=1e-6)

    def test_model_var_uses_actual_second_moment_of_u(self):
        mu1, eu2 = u_moments(BASE)
        sd_u = math.sqrt(eu2 - mu1 ** 2)
        assert model_var(BASE) == pytest.approx(two_moment_variance(mu1, sd_u, 0.1), rel=1e-12)

    def test_error_is_nearly_unbiased(self):
        ev, ev2 = v_moments(BASE)
        assert ev == pytest.approx(1.0, abs=1e-15)
        assert ev2 == pytest.approx(1.01, abs=1e-15)
