"""Product model ``W = U * V`` with ``V = 1 + eps``.

``U`` is an RMM member with weight ``2 - lam``, power ``lam`` and lower
ratio ``M1 / sigma1``; ``V`` is a normal error centred at one and truncated
at zero.  The weight on the standardized error ``z2`` is selectable:

``"unit"`` (default)
    ``z2 = (v - 1) / sigma2`` is a standard normal truncated at
    ``-1/sigma2``, so ``sigma2`` is the error standard deviation.
``"lambda"``
    the joint-density weight ``lam - 1`` multiplies ``z2**2 / 2``, so the
    error standard deviation is ``sigma2 / sqrt(lam - 1)`` and the error is
    improper at ``lam = 1``.

The joint density, the marginal of ``W``, the sampler and the moments are
all derived from the same component densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from tworv.errors import NumericalError, ParameterError
from tworv.rmm import RmmParams, normalizer, raw_moment, rmm_pdf, rmm_ppf

SIGMA2_MAX = 1.0 / 6.0
ERROR_WEIGHTS = ("unit", "lambda")
# half-width of the V integration window in error standard deviations
V_WINDOW = 8.0


@dataclass(frozen=True)
class BivariateParams:
    """Parameters ``(lam, M1, sigma1, sigma2)`` of the product model.

    ``kappa1`` and ``kappa2`` are filled in from the component normalizers.
    """

    lam: float
    M1: float
    sigma1: float
    sigma2: float
    error_weight: str = "unit"
    kappa1: float = field(init=False, repr=False)
    kappa2: float = field(init=False, repr=False)

    def __post_init__(self):
        if not 1.0 <= self.lam <= 2.0:
            raise ParameterError(f"lambda must lie in [1, 2], got {self.lam!r}")
        if not self.M1 >= 0:
            raise ParameterError(f"M1 must be >= 0, got {self.M1!r}")
        if not self.sigma1 > 0:
            raise ParameterError(f"sigma1 must be positive, got {self.sigma1!r}")
        if not 0 < self.sigma2 <= SIGMA2_MAX:
            raise ParameterError(f"sigma2 must lie in (0, 1/6], got {self.sigma2!r}")
        if self.error_weight not in ERROR_WEIGHTS:
            raise ParameterError(f"error_weight must be one of {ERROR_WEIGHTS}")
        object.__setattr__(self, "kappa1", normalizer(self.alpha1, self.lam, self.L1, verify=False))
        object.__setattr__(self, "kappa2", normalizer(self.alpha2, 2.0, self.L2, verify=False))

    @property
    def alpha1(self) -> float:
        return 2.0 - self.lam

    @property
    def alpha2(self) -> float:
        """Weight on the error term (``lam - 1`` or one, per ``error_weight``)."""
        return self.lam - 1.0 if self.error_weight == "lambda" else 1.0

    @property
    def L1(self) -> float:
        return self.M1 / self.sigma1

    @property
    def L2(self) -> float:
        return 1.0 / self.sigma2

    @property
    def z1_params(self) -> RmmParams:
        return RmmParams(self.alpha1, self.lam, self.L1, self.kappa1)

    @property
    def z2_params(self) -> RmmParams:
        return RmmParams(self.alpha2, 2.0, self.L2, self.kappa2)

    @property
    def error_sd(self) -> float:
        """Standard deviation of ``eps`` ignoring the truncation at -1."""
        if self.alpha2 == 0:
            return math.inf
        return self.sigma2 / math.sqrt(self.alpha2)

    def require_proper(self) -> None:
        if self.alpha1 == 0:
            raise ParameterError("U is improper at lambda = 2 (its weight 2 - lambda vanishes)")
        if self.alpha2 == 0:
            raise ParameterError("V is improper at lambda = 1 under error_weight='lambda'")


def joint_pdf(z1: float, z2: float, params: BivariateParams) -> float:
    """Joint density of the standardized pair; zero outside
    ``z1 >= -M1/sigma1``, ``z2 >= -1/sigma2``."""
    p = params
    if z1 < -p.L1 or z2 < -p.L2:
        return 0.0
    a1, a2 = p.alpha1, p.alpha2
    t1 = 0.0
    if a1 != 0:
        t1 = (a1 / p.lam) * (abs(z1) ** p.lam - 1.0)
    t2 = 0.5 * a2 * (z2 * z2 - 1.0)
    return p.kappa1 * p.kappa2 * math.exp(-t1 - t2)


def u_pdf(u: float, params: BivariateParams) -> float:
    return rmm_pdf((u - params.M1) / params.sigma1, params.z1_params) / params.sigma1


def v_pdf(v: float, params: BivariateParams) -> float:
    return rmm_pdf((v - 1.0) / params.sigma2, params.z2_params) / params.sigma2


def _v_window(params: BivariateParams) -> tuple[float, float]:
    half = V_WINDOW * params.error_sd
    return max(0.0, 1.0 - half), 1.0 + half


def marginal_pdf_w(w: float, params: BivariateParams, tol: float = 1e-10) -> float:
    """Density of ``W`` by integrating ``f_U(w/v) f_V(v) / v`` over ``v``.

    The integration runs over ``1 +- 8`` error standard deviations, which
    carries all but ``< 1e-14`` of the mass of ``V``.

    Raises
    ------
    NumericalError
        If adaptive quadrature reports non-convergence.
    """
    params.require_proper()
    if w < 0:
        return 0.0
    lo, hi = _v_window(params)
    points = [1.0]
    if params.M1 > 0 and w > 0:
        # kink of f_U at its mode u = M1
        points.append(w / params.M1)
    points = sorted(p for p in points if lo < p < hi)
    f = lambda v: u_pdf(w / v, params) * v_pdf(v, params) / v  # noqa: E731
    val, err, info = _quad(f, lo, hi, tol, points)[:3]
    return val


def _quad(f, lo, hi, tol, points):
    out = integrate.quad(
        f, lo, hi, epsabs=tol, epsrel=1e-10, limit=500, points=points or None, full_output=1
    )
    if len(out) > 3 and out[2]["last"] >= 500:
        raise NumericalError(
            f"marginal quadrature did not converge: {out[2]['last']} subintervals, "
            f"error estimate {out[1]:.3e}"
        )
    return out


def marginal_cdf_w(w_grid, params: BivariateParams, tol: float = 1e-11) -> np.ndarray:
    """Distribution function of ``W`` on an increasing grid by cumulative
    quadrature of :func:`marginal_pdf_w` (first node taken as ``0``)."""
    params.require_proper()
    w_grid = np.asarray(w_grid, dtype=float)
    if np.any(np.diff(w_grid) <= 0) or w_grid[0] < 0:
        raise ParameterError("w_grid must be non-negative and strictly increasing")
    pdf = lambda w: marginal_pdf_w(w, params, tol)  # noqa: E731
    out = np.empty_like(w_grid)
    acc = integrate.quad(pdf, 0.0, w_grid[0], epsabs=tol, limit=200)[0] if w_grid[0] > 0 else 0.0
    out[0] = acc
    for i in range(1, w_grid.size):
        acc += integrate.quad(pdf, w_grid[i - 1], w_grid[i], epsabs=tol, limit=200)[0]
        out[i] = acc
    return out


def _truncated_error(rng: np.random.Generator, n: int, params: BivariateParams) -> np.ndarray:
    z = rng.standard_normal(n) / math.sqrt(params.alpha2)
    bad = np.flatnonzero(z < -params.L2)
    while bad.size:
        z[bad] = rng.standard_normal(bad.size) / math.sqrt(params.alpha2)
        bad = bad[z[bad] < -params.L2]
    return params.sigma2 * z


def sample_w(params: BivariateParams, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` values of ``W``.

    ``U`` comes from exact inverse-CDF sampling of its RMM component and
    ``eps`` from the normal error truncated to ``[-1, inf)`` by rejection.
    The same ``seed`` always gives the same batch.
    """
    params.require_proper()
    if n < 0:
        raise ParameterError(f"n must be non-negative, got {n}")
    if n == 0:
        return np.empty(0)
    rng = np.random.default_rng(seed)
    u = params.M1 + params.sigma1 * rmm_ppf(rng.random(n), params.z1_params)
    eps = _truncated_error(rng, n, params)
    return u * (1.0 + eps)


def u_moments(params: BivariateParams) -> tuple[float, float]:
    """``(E(U), E(U**2))`` from the closed-form moments of ``Z1``."""
    p = params
    e1 = raw_moment(1, p.alpha1, p.lam, p.L1, verify=False)
    e2 = raw_moment(2, p.alpha1, p.lam, p.L1, verify=False)
    mu1 = p.M1 + p.sigma1 * e1
    return mu1, p.M1 ** 2 + 2.0 * p.M1 * p.sigma1 * e1 + p.sigma1 ** 2 * e2


def v_moments(params: BivariateParams) -> tuple[float, float]:
    """Exact ``(E(V), E(V**2))`` including the truncation at ``v = 0``."""
    p = params
    e1 = raw_moment(1, p.alpha2, 2.0, p.L2, verify=False)
    e2 = raw_moment(2, p.alpha2, 2.0, p.L2, verify=False)
    return 1.0 + p.sigma2 * e1, 1.0 + 2.0 * p.sigma2 * e1 + p.sigma2 ** 2 * e2


def model_mean(params: BivariateParams) -> float:
    """``E(W) = E(U)`` taking ``E(V) = 1``."""
    return u_moments(params)[0]


def model_var(params: BivariateParams) -> float:
    """``Var(W) = E(U**2) E(V**2) - E(U)**2`` with ``E(V**2) = 1 + sd_eps**2``."""
    params.require_proper()
    mu1, eu2 = u_moments(params)
    return eu2 * (1.0 + params.error_sd ** 2) - mu1 ** 2


def two_moment_variance(mu1: float, sigma1: float, sigma2: float) -> float:
    """``(sigma1**2 + mu1**2)(1 + sigma2**2) - mu1**2``: the variance of ``W``
    when ``sigma1`` is the standard deviation of ``U``."""
    return (sigma1 ** 2 + mu1 ** 2) * (1.0 + sigma2 ** 2) - mu1 ** 2
