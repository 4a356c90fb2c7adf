import math

import numpy as np
import pytest

from tworv.bivariate import BivariateParams, model_mean, model_var, two_moment_variance
from tworv.errors import FitError, InfeasibleCandidateError, ParameterError
from tworv.fit import (
    FitConfig,
    FitStatus,
    ModeMeanTarget,
    MomentTarget,
    fit_mode_mean,
    fit_two_component,
    grid_search,
    residual_vector,
    sigma1_from_target,
)
from tworv.rmm import mode_density, preset, raw_moment, raw_moment_complex, unit_variance_L


class TestTargets:
    @pytest.mark.parametrize("mean, var", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
    def test_positive(self, mean, var):
        with pytest.raises(ParameterError):
            MomentTarget(mean, var)

    def test_sigma1_substitution(self):
        t = MomentTarget(2.0, 1.0)
        s2 = 0.1
        s1 = sigma1_from_target(t, s2)
        assert s1 ** 2 == pytest.approx((1.0 - 4.0 * 0.01) / 1.01, rel=1e-14)
        # plugging back into the two-moment variance recovers the target
        assert two_moment_variance(t.mean, s1, s2) == pytest.approx(t.variance, rel=1e-12)

    def test_infeasible_sigma1(self):
        with pytest.raises(InfeasibleCandidateError):
            sigma1_from_target(MomentTarget(10.0, 0.01), 0.15)


class TestResidualVector:
    def test_exponential_like_candidate(self):
        r = residual_vector((1.0, 0.0, 1e-4), MomentTarget(1.0, 1.0))
        assert np.all(np.abs(r) < 1e-3)

    def test_far_truncation_leaves_negligible_mean(self):
        # E(Z2) for a normal truncated twenty sd below its mode
        assert abs(raw_moment_complex(1, 1.0, 2.0, 20.0).real) < 1e-80

    def test_infeasible_candidate(self):
        with pytest.raises(InfeasibleCandidateError):
            residual_vector((1.5, 1.0, 0.15), MomentTarget(10.0, 0.01))

    def test_improper_u(self):
        with pytest.raises(InfeasibleCandidateError, match="improper"):
            residual_vector((2.0, 1.0, 0.05), MomentTarget(10.0, 1.0))

    def test_lambda_weight_improper_error(self):
        with pytest.raises(InfeasibleCandidateError, match="improper"):
            residual_vector((1.0, 0.5, 0.05), MomentTarget(1.0, 1.0), "lambda")

    def test_components_match_moment_equations(self):
        lam, M1, s2 = 1.4, 0.8, 0.05
        t = MomentTarget(2.0, 1.5)
        s1 = sigma1_from_target(t, s2)
        d = (t.mean - M1) / s1
        r = residual_vector((lam, M1, s2), t)
        assert r[0] == pytest.approx(raw_moment(1, 2 - lam, lam, M1 / s1) - d, rel=1e-12)
        assert r[1] == pytest.approx(raw_moment(2, 2 - lam, lam, M1 / s1) - 1 - d * d, rel=1e-12)


class TestTwoComponentFit:
    def test_exponential_target(self):
        res = fit_two_component(MomentTarget(1.0, 1.0))
        assert abs(res.lam - 1.0) < 0.05
        assert res.residual < 1e-4
        assert res.status in set(FitStatus)

    def test_beats_grid(self):
        p = BivariateParams(1.7, 2.0, 0.4, 0.08)
        t = MomentTarget(model_mean(p), model_var(p))
        res = fit_two_component(t)
        _, grid_best = grid_search(t, n=10)
        assert res.residual <= grid_best

    def test_residuals_reported(self):
        res = fit_two_component(MomentTarget(1.0, 1.0))
        assert res.residual == pytest.approx(sum(r * r for r in res.residuals), rel=1e-12)
        assert res.evaluations > 0

    def test_deterministic(self):
        t = MomentTarget(3.0, 2.0)
        assert fit_two_component(t) == fit_two_component(t)

    def test_all_starts_infeasible(self):
        with pytest.raises(FitError):
            fit_two_component(MomentTarget(10.0, 1e-12))

    def test_lambda_weight_option_runs(self):
        res = fit_two_component(MomentTarget(1.0, 1.0), FitConfig(error_weight="lambda"))
        assert 1.0 <= res.lam <= 2.0
        assert math.isfinite(res.residual)


class TestModeMeanFit:
    def test_exponential(self):
        p = preset("exponential")
        res = fit_mode_mean(ModeMeanTarget(mode_density(p), 1.0))
        assert (res.alpha, res.lam) == (pytest.approx(1.0, abs=1e-4), pytest.approx(1.0, abs=1e-4))

    def test_normal(self):
        res = fit_mode_mean(ModeMeanTarget(1 / math.sqrt(2 * math.pi), 0.0))
        assert (res.alpha, res.lam) == (pytest.approx(1.0, abs=1e-4), pytest.approx(2.0, abs=1e-4))

    def test_lambda_one_and_a_half(self):
        L = unit_variance_L(1.0, 1.5)
        from tworv.rmm import RmmParams

        p = RmmParams.make(1.0, 1.5, L)
        target = ModeMeanTarget(mode_density(p), raw_moment(1, 1.0, 1.5, L))
        res = fit_mode_mean(target)
        assert (res.alpha, res.lam) == (pytest.approx(1.0, abs=1e-4), pytest.approx(1.5, abs=1e-4))
        assert res.L == pytest.approx(L, abs=1e-4)

    def test_fixed_L(self):
        from tworv.rmm import RmmParams

        p = RmmParams.make(0.8, 1.3, 0.5)
        target = ModeMeanTarget(mode_density(p), raw_moment(1, 0.8, 1.3, 0.5), L=0.5)
        res = fit_mode_mean(target)
        assert res.L == 0.5
        assert res.residual < 1e-8

    def test_no_root(self):
        with pytest.raises(FitError, match="best max residual"):
            # support [0, inf) cannot have a negative mean
            fit_mode_mean(ModeMeanTarget(1.0, -1.0, L=0.0))

    def test_validation(self):
        with pytest.raises(ParameterError):
            ModeMeanTarget(0.0, 1.0)
        with pytest.raises(ParameterError):
            ModeMeanTarget(1.0, 1.0, L=-1.0)
