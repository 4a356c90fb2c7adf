"""Moment matching for the product model and the mode/mean approximation.

The two-component fit takes an observed ``(mean, variance)`` of ``W`` and
searches ``(lam, M1, sigma2)`` so that the standardized moments of both
components agree with their mode-standardized targets::

    E(Z1)    = d            E(Z1**2) = 1 + d**2,   d = (mean - M1) / sigma1
    E(Z2)    = 0            E(Z2**2) = 1

with ``sigma1**2 = (variance - mean**2 sigma2**2) / (1 + sigma2**2)``.  The
sum of squared differences is minimized by multi-start Nelder-Mead.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from tworv.errors import FitError, InfeasibleCandidateError, NumericalError, ParameterError
from tworv.rmm import (
    LOG_LIMIT,
    NORMAL_L,
    UL,
    normalizer,
    raw_moment_complex,
)

PENALTY = 1e12
SIGMA2_MIN = 1e-6
SIGMA2_MAX = 1.0 / 6.0


@dataclass(frozen=True)
class MomentTarget:
    mean: float
    variance: float

    def __post_init__(self):
        if not (self.mean > 0 and self.variance > 0):
            raise ParameterError(
                f"mean and variance must be positive, got ({self.mean!r}, {self.variance!r})"
            )


class FitStatus(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    BOUNDARY_HIT = "BoundaryHit"


@dataclass(frozen=True)
class FitConfig:
    starts: int = 8
    max_iter: int = 2000
    xatol: float = 1e-9
    sigma2_min: float = SIGMA2_MIN
    error_weight: str = "unit"


@dataclass(frozen=True)
class FitResult:
    lam: float
    M1: float
    sigma2: float
    sigma1: float
    residual: float
    status: FitStatus
    residuals: tuple[float, float, float, float] = (math.nan,) * 4
    evaluations: int = 0


def sigma1_from_target(target: MomentTarget, sigma2: float) -> float:
    """Standard deviation of ``U`` implied by the observed moments."""
    s1sq = (target.variance - target.mean ** 2 * sigma2 ** 2) / (1.0 + sigma2 ** 2)
    if not s1sq > 0:
        raise InfeasibleCandidateError(
            f"sigma2={sigma2!r} leaves sigma1**2={s1sq!r} <= 0 "
            f"(variance {target.variance!r} < mean**2 * sigma2**2)"
        )
    return math.sqrt(s1sq)


def _first_two(alpha: float, lam: float, L: float) -> tuple[float, float]:
    m1 = raw_moment_complex(1, alpha, lam, L)
    m2 = raw_moment_complex(2, alpha, lam, L)
    return m1.real, m2.real


def residual_vector(candidate, target: MomentTarget, error_weight: str = "unit") -> np.ndarray:
    """Four moment-equation residuals on the standardized scale.

    Parameters
    ----------
    candidate : sequence of float
        ``(lam, M1, sigma2)``.
    target : MomentTarget
    error_weight : {"unit", "lambda"}
        Weight of the error component, as in
        :class:`~tworv.bivariate.BivariateParams`.

    Raises
    ------
    InfeasibleCandidateError
        When the implied ``sigma1**2`` is not positive, or a component is
        improper (``U`` at ``lam = 2``; the error at ``lam = 1`` under
        ``"lambda"``).
    """
    lam, M1, sigma2 = map(float, candidate)
    sigma1 = sigma1_from_target(target, sigma2)
    alpha1 = 2.0 - lam
    alpha2 = lam - 1.0 if error_weight == "lambda" else 1.0
    if alpha1 <= 0:
        raise InfeasibleCandidateError("U is improper at lambda = 2")
    if alpha2 <= 0:
        raise InfeasibleCandidateError("error component is improper at lambda = 1")
    d = (target.mean - M1) / sigma1
    e11, e12 = _first_two(alpha1, lam, M1 / sigma1)
    e21, e22 = _first_two(alpha2, 2.0, 1.0 / sigma2)
    return np.array([e11 - d, e12 - (1.0 + d * d), e21, e22 - 1.0])


def _objective(candidate, target: MomentTarget, error_weight: str) -> float:
    try:
        r = residual_vector(candidate, target, error_weight)
    except InfeasibleCandidateError:
        # distance to the feasible set; improper endpoints get a unit offset
        sigma2 = candidate[2]
        gap = target.mean ** 2 * sigma2 ** 2 - target.variance
        return PENALTY + (gap if gap > 0 else 1.0)
    val = float(r @ r)
    if not math.isfinite(val):
        raise NumericalError(f"non-finite residual at candidate {tuple(candidate)}")
    return val


def _box(target: MomentTarget, config: FitConfig) -> tuple[np.ndarray, np.ndarray]:
    return (
        np.array([1.0, 0.0, config.sigma2_min]),
        np.array([2.0, target.mean, SIGMA2_MAX]),
    )


def grid_search(target: MomentTarget, n: int = 10, config: FitConfig | None = None):
    """Minimum of the least-squares objective over an ``n**3`` uniform grid
    of the search box.  Returns ``(best_point, best_value)``."""
    config = config or FitConfig()
    lo, hi = _box(target, config)
    axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    best, best_val = None, math.inf
    for lam in axes[0]:
        for M1 in axes[1]:
            for s2 in axes[2]:
                val = _objective((lam, M1, s2), target, config.error_weight)
                if val < best_val:
                    best, best_val = (lam, M1, s2), val
    return np.array(best), best_val


def fit_two_component(target: MomentTarget, config: FitConfig | None = None) -> FitResult:
    """Fit ``(lam, M1, sigma2)`` to an observed mean and variance.

    Nelder-Mead runs in box-normalized coordinates from ``config.starts``
    Sobol points and stops once the simplex diameter is below
    ``config.xatol``.

    Raises
    ------
    FitError
        If every start stays infeasible.
    """
    config = config or FitConfig()
    lo, hi = _box(target, config)
    span = hi - lo
    to_box = lambda t: lo + span * np.clip(t, 0.0, 1.0)  # noqa: E731
    f = lambda t: _objective(to_box(t), target, config.error_weight)  # noqa: E731

    m = max(1, int(math.ceil(math.log2(max(config.starts, 1)))))
    starts = qmc.Sobol(d=3, scramble=False).random_base2(m)[: config.starts]
    starts = 0.05 + 0.9 * starts
    best, evals = None, 0
    for t0 in starts:
        simplex = np.vstack([t0] + [t0 + 0.1 * np.eye(3)[i] * (1 if t0[i] < 0.5 else -1)
                                    for i in range(3)])
        res = optimize.minimize(
            f, t0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * 3,
            options=dict(maxiter=config.max_iter, xatol=config.xatol, fatol=np.inf,
                         initial_simplex=simplex),
        )
        evals += res.nfev
        if best is None or res.fun < best.fun:
            best = res
    if best.fun >= PENALTY:
        raise FitError(f"all {config.starts} starts infeasible for target {target}")
    x = to_box(best.x)
    lam, M1, sigma2 = (float(v) for v in x)
    on_edge = np.any(np.isclose(x, lo, rtol=0, atol=1e-9 * span) |
                     np.isclose(x, hi, rtol=0, atol=1e-9 * span))
    if best.nit >= config.max_iter:
        status = FitStatus.MAX_ITERATIONS
    elif on_edge:
        status = FitStatus.BOUNDARY_HIT
    else:
        status = FitStatus.CONVERGED
    r = residual_vector((lam, M1, sigma2), target, config.error_weight)
    return FitResult(
        lam=lam, M1=M1, sigma2=sigma2, sigma1=sigma1_from_target(target, sigma2),
        residual=float(r @ r), status=status, residuals=tuple(float(v) for v in r),
        evaluations=evals,
    )


@dataclass(frozen=True)
class ModeMeanTarget:
    """Density at the mode and standardized mean of the modeled variable.

    ``L`` is the lower-support ratio ``mode / sd``; when ``None`` it is
    solved for together with ``(alpha, lam)`` from ``Var(Z) = 1``.
    """

    mode_density: float
    standardized_mean: float
    L: float | None = None

    def __post_init__(self):
        if not self.mode_density > 0:
            raise ParameterError(f"mode_density must be positive, got {self.mode_density!r}")
        if self.L is not None and not self.L >= 0:
            raise ParameterError(f"L must be >= 0, got {self.L!r}")


@dataclass(frozen=True)
class ModeMeanFit:
    alpha: float
    lam: float
    kappa: float
    L: float
    residual: float


def _mode_mean_equations(alpha, lam, L, target: ModeMeanTarget, with_variance: bool):
    kappa = normalizer(alpha, lam, L, verify=False)
    m1 = raw_moment_complex(1, alpha, lam, L).real
    eqs = [kappa * math.exp(alpha / lam) - target.mode_density, m1 - target.standardized_mean]
    if with_variance:
        m2 = raw_moment_complex(2, alpha, lam, L).real
        eqs.append(m2 - m1 * m1 - 1.0)
    return np.array(eqs)


def fit_mode_mean(target: ModeMeanTarget, tol: float = 1e-8) -> ModeMeanFit:
    """Identify ``(alpha, lam)`` of a single RMM member by matching its
    density at the mode and its mean.

    Solves the equations by bounded least squares from a small grid of
    starts over ``alpha in (0, 4]``, ``lam in (0, UL]``.

    Raises
    ------
    FitError
        If no start brings the largest residual below ``tol``.
    """
    free_L = target.L is None
    lo = [1e-3, 10 * LOG_LIMIT] + ([0.0] if free_L else [])
    hi = [4.0, UL] + ([NORMAL_L] if free_L else [])

    def fun(x):
        L = x[2] if free_L else target.L
        try:
            return _mode_mean_equations(x[0], x[1], L, target, free_L)
        except (ArithmeticError, ValueError):
            return np.full(3 if free_L else 2, 1e6)

    best = None
    for a0 in (0.5, 1.0, 2.0):
        for l0 in (1.0, 1.5, 2.0):
            for L0 in ((0.0, 2.0, 10.0) if free_L else (None,)):
                x0 = [a0, l0] + ([L0] if free_L else [])
                res = optimize.least_squares(fun, x0, bounds=(lo, hi), method="trf",
                                             xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
                worst = float(np.max(np.abs(res.fun)))
                if best is None or worst < best[1]:
                    best = (res.x, worst)
                if worst < tol * 1e-2:
                    break
            if best[1] < tol * 1e-2:
                break
        if best[1] < tol * 1e-2:
            break
    x, worst = best
    if worst >= tol:
        raise FitError(f"no (alpha, lambda) reproduces {target}; best max residual {worst:.3e}")
    alpha, lam = float(x[0]), float(x[1])
    L = float(x[2]) if free_L else float(target.L)
    return ModeMeanFit(alpha, lam, normalizer(alpha, lam, L, verify=False), L, worst)
