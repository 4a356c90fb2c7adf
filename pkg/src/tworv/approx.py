"""Generalized univariate approximation family and classical special cases.

The family is::

    f(z) = kappa * exp(-(a1/l1)(z**l1 - 1) - (a2/l2)((b0 + b1 z)**l2 - 1))

where a power term with ``l < 1e-6`` is replaced by its limit ``a log(.)``
and a term with zero weight is dropped.  Each ``map_*`` function returns
the argument substitution and parameter vector under which the family
reproduces a textbook density up to its normalizing constant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from tworv.errors import DomainError, ParameterError
from tworv.rmm import LOG_LIMIT, UL

EQUIVALENCE_TOL = 1e-9


@dataclass(frozen=True)
class ApproxParams:
    lambda1: float
    lambda2: float
    alpha1: float
    alpha2: float
    beta0: float
    beta1: float
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            v = getattr(self, name)
            if not 0 <= v <= UL:
                raise ParameterError(f"{name} must lie in [0, {UL}], got {v!r}")
        if not self.kappa > 0:
            raise ParameterError(f"kappa must be positive, got {self.kappa!r}")

    def as_dict(self) -> dict:
        return dict(lambda1=self.lambda1, lambda2=self.lambda2, alpha1=self.alpha1,
                    alpha2=self.alpha2, beta0=self.beta0, beta1=self.beta1)


def _term(base: float, alpha: float, lam: float, label: str) -> float:
    if alpha == 0:
        return 0.0
    if lam < LOG_LIMIT:
        if base <= 0:
            raise DomainError(f"{label}: log limit needs a positive base, got {base!r}")
        return alpha * math.log(base)
    if base < 0 and lam != int(lam):
        raise DomainError(f"{label}: negative base {base!r} with non-integer power {lam!r}")
    return (alpha / lam) * (base ** lam - 1.0)


def approx_log_pdf(z: float, params: ApproxParams) -> float:
    """Natural log of :func:`approx_pdf`."""
    p = params
    t1 = _term(z, p.alpha1, p.lambda1, "first term z")
    t2 = _term(p.beta0 + p.beta1 * z, p.alpha2, p.lambda2, "second term b0 + b1 z")
    return math.log(p.kappa) - t1 - t2


def approx_pdf(z: float, params: ApproxParams) -> float:
    return math.exp(approx_log_pdf(z, params))


def weight_sum(params: ApproxParams) -> float:
    return params.alpha1 + params.alpha2


class TransformKind(str, enum.Enum):
    IDENTITY = "Identity"
    AFFINE = "Affine"
    LOG_SHIFT = "LogShift"
    SQUARED_AFFINE = "SquaredAffine"
    SCALED_POWER_ARG = "ScaledPowerArg"


@dataclass(frozen=True)
class ArgTransform:
    """Substitution ``z = T(x)`` taking the original variable to the
    family's argument."""

    kind: TransformKind
    center: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ParameterError(f"transform scale must be positive, got {self.scale!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k is TransformKind.IDENTITY:
            return x
        if k in (TransformKind.AFFINE, TransformKind.SCALED_POWER_ARG):
            return (x - self.center) / self.scale
        if k is TransformKind.LOG_SHIFT:
            return np.log(x) - self.center
        return ((x - self.center) / self.scale) ** 2

    def log_jacobian(self, x):
        """``log |dz/dx|``."""
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k is TransformKind.IDENTITY:
            return np.zeros_like(x)
        if k in (TransformKind.AFFINE, TransformKind.SCALED_POWER_ARG):
            return np.full_like(x, -math.log(self.scale))
        if k is TransformKind.LOG_SHIFT:
            return -np.log(x)
        return np.log(2.0 * np.abs(x - self.center)) - 2.0 * math.log(self.scale)


@dataclass(frozen=True)
class MappedDistribution:
    name: str
    transform: ArgTransform
    params: ApproxParams
    support: tuple[float, float]

    def log_density(self, x):
        """Unnormalized log-density in the original variable."""
        z = self.transform(x)
        return np.array([approx_log_pdf(float(v), self.params) for v in np.ravel(z)]).reshape(
            np.shape(z)
        )


def _positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ParameterError(f"{k} must be positive, got {v!r}")


def map_weibull(b: float, c: float) -> MappedDistribution:
    """Weibull with scale ``b`` and shape ``c``; ``z = x / b``."""
    _positive(b=b, c=c)
    params = ApproxParams(lambda1=0.0, lambda2=c, alpha1=1.0 - c, alpha2=c, beta0=0.0, beta1=1.0)
    return MappedDistribution(
        "weibull", ArgTransform(TransformKind.SCALED_POWER_ARG, 0.0, b), params, (0.0, math.inf)
    )


def map_generalized_gamma(a: float, b: float, c: float, k: float) -> MappedDistribution:
    """Generalized gamma with location ``a``, scale ``b``, shape ``c`` and
    power ``k``; ``z = (x - a) / (b c**(1/k))``."""
    _positive(b=b, c=c, k=k)
    kc = k * c
    params = ApproxParams(lambda1=0.0, lambda2=k, alpha1=1.0 - kc, alpha2=kc, beta0=0.0, beta1=1.0)
    transform = ArgTransform(TransformKind.AFFINE, a, b * c ** (1.0 / k))
    return MappedDistribution("generalized_gamma", transform, params, (a, math.inf))


def map_gamma(shape: float, scale: float = 1.0) -> MappedDistribution:
    return replace(map_generalized_gamma(0.0, scale, shape, 1.0), name="gamma")


def map_exponential(scale: float = 1.0) -> MappedDistribution:
    return replace(map_generalized_gamma(0.0, scale, 1.0, 1.0), name="exponential")


def map_weibull_gg(scale: float, shape: float) -> MappedDistribution:
    """Weibull as the ``c = 1`` generalized gamma (power ``k`` = shape)."""
    return replace(map_generalized_gamma(0.0, scale, 1.0, shape), name="weibull_gg")


def map_chi_squared(n: float) -> MappedDistribution:
    _positive(n=n)
    return replace(map_generalized_gamma(0.0, 2.0, n / 2.0, 1.0), name="chi_squared")


def map_f(m: float, n: float) -> MappedDistribution:
    """F distribution with ``(m, n)`` degrees of freedom; ``z = w``."""
    _positive(m=m, n=n)
    params = ApproxParams(
        lambda1=0.0, lambda2=0.0, alpha1=1.0 - m / 2.0, alpha2=m / 2.0 + n / 2.0,
        beta0=1.0, beta1=m / n,
    )
    return MappedDistribution("f", ArgTransform(TransformKind.IDENTITY), params, (0.0, math.inf))


def map_lognormal(mu: float, sigma: float) -> MappedDistribution:
    """Log-normal; ``z = log(w) - mu``.  The ``-z`` term carries the
    ``1/w`` factor, so no Jacobian is needed."""
    _positive(sigma=sigma)
    params = ApproxParams(lambda1=1.0, lambda2=2.0, alpha1=1.0, alpha2=1.0, beta0=0.0,
                          beta1=1.0 / sigma)
    return MappedDistribution(
        "lognormal", ArgTransform(TransformKind.LOG_SHIFT, mu), params, (0.0, math.inf)
    )


def map_student_t(m: float) -> MappedDistribution:
    """Student's t with ``m`` degrees of freedom; ``z = w**2``."""
    _positive(m=m)
    params = ApproxParams(lambda1=0.0, lambda2=0.0, alpha1=0.0, alpha2=(m + 1.0) / 2.0,
                          beta0=1.0, beta1=1.0 / m)
    return MappedDistribution(
        "student_t", ArgTransform(TransformKind.SQUARED_AFFINE, 0.0, 1.0), params,
        (-math.inf, math.inf),
    )


def map_cauchy(a: float, b: float) -> MappedDistribution:
    """Cauchy with location ``a`` and scale ``b``; ``z = ((w - a)/b)**2``."""
    _positive(b=b)
    params = ApproxParams(lambda1=0.0, lambda2=0.0, alpha1=0.0, alpha2=1.0, beta0=1.0, beta1=1.0)
    return MappedDistribution(
        "cauchy", ArgTransform(TransformKind.SQUARED_AFFINE, a, b), params,
        (-math.inf, math.inf),
    )


def verify_mapping(mapped: MappedDistribution, reference_logpdf: Callable, grid,
                   include_jacobian: bool = False) -> float:
    """Largest deviation of ``log f_mapped - log f_ref`` from its grid mean.

    A constant difference means the two densities have the same shape, the
    mean absorbing the unknown ``kappa``.  Every mapping here writes the
    density in the original variable directly, so the Jacobian is off by
    default; pass ``include_jacobian=True`` to treat ``z`` as the random
    variable instead.

    Raises
    ------
    DomainError
        If the mapped density is undefined at a grid point.
    """
    x = np.asarray(grid, dtype=float)
    lo, hi = mapped.support
    if np.any((x < lo) | (x > hi)):
        raise DomainError(f"grid leaves the support {mapped.support} of {mapped.name}")
    d = mapped.log_density(x) - np.asarray(reference_logpdf(x), dtype=float)
    if include_jacobian:
        d = d + mapped.transform.log_jacobian(x)
    if not np.all(np.isfinite(d)):
        raise DomainError(f"{mapped.name}: non-finite log-density difference on the grid")
    return float(np.max(np.abs(d - d.mean())))


def reference_logpdf(family: str, *args: float) -> Callable:
    """Closed-form log-density of a named family, with arguments in the
    order of the matching ``map_*`` function."""
    from scipy import stats

    refs = {
        "weibull": lambda b, c: stats.weibull_min(c, scale=b),
        "generalized_gamma": lambda a, b, c, k: stats.gengamma(c, k, loc=a, scale=b),
        "gamma": lambda shape, scale=1.0: stats.gamma(shape, scale=scale),
        "exponential": lambda scale=1.0: stats.expon(scale=scale),
        "weibull_gg": lambda scale, shape: stats.weibull_min(shape, scale=scale),
        "chi_squared": lambda n: stats.chi2(n),
        "f": lambda m, n: stats.f(m, n),
        "lognormal": lambda mu, sigma: stats.lognorm(sigma, scale=math.exp(mu)),
        "student_t": lambda m: stats.t(m),
        "cauchy": lambda a, b: stats.cauchy(a, b),
    }
    if family not in refs:
        raise ParameterError(f"no reference density for {family!r}")
    return refs[family](*args).logpdf


def default_grid(mapped: MappedDistribution, n: int = 200) -> np.ndarray:
    """``n`` points spanning the bulk of the mapped distribution, kept off
    the support edges where a density may be zero or infinite."""
    lo, hi = mapped.support
    t = mapped.transform
    if t.kind is TransformKind.LOG_SHIFT:
        sigma = 1.0 / mapped.params.beta1
        return np.exp(np.linspace(t.center - 4 * sigma, t.center + 4 * sigma, n))
    if math.isinf(lo):
        return np.linspace(t.center - 10 * t.scale, t.center + 10 * t.scale, n)
    scale = t.scale if t.kind is not TransformKind.IDENTITY else 1.0
    return np.linspace(lo + 0.01 * scale, lo + 10 * scale, n)


def _gallery():
    cases = [
        ("Weibull(b=1, c=2)", "weibull", (1.0, 2.0), np.linspace(0.01, 5.0, 200)),
        ("Weibull(b=2.5, c=0.7)", "weibull", (2.5, 0.7), np.linspace(0.01, 10.0, 200)),
        ("GenGamma(a=1, b=2, c=1.5, k=0.8)", "generalized_gamma", (1.0, 2.0, 1.5, 0.8),
         np.linspace(1.01, 12.0, 200)),
        ("Gamma(c=3, b=1.5)", "gamma", (3.0, 1.5), np.linspace(0.01, 15.0, 200)),
        ("Exponential(b=2)", "exponential", (2.0,), np.linspace(0.01, 10.0, 200)),
        ("Weibull as GenGamma(c=1, k=1.7)", "weibull_gg", (1.3, 1.7),
         np.linspace(0.01, 5.0, 200)),
        ("ChiSquared(n=4)", "chi_squared", (4.0,), np.linspace(0.01, 20.0, 200)),
        ("F(m=2, n=2)", "f", (2.0, 2.0), np.linspace(0.01, 10.0, 200)),
        ("F(m=5, n=7)", "f", (5.0, 7.0), np.linspace(0.01, 10.0, 200)),
        ("LogNormal(mu=0, sigma=1)", "lognormal", (0.0, 1.0), np.linspace(0.01, 10.0, 200)),
        ("LogNormal(mu=0.5, sigma=0.4)", "lognormal", (0.5, 0.4), np.linspace(0.1, 8.0, 200)),
        ("StudentT(m=5)", "student_t", (5.0,), np.linspace(-8.0, 8.0, 200)),
        ("StudentT(m=1)", "student_t", (1.0,), np.linspace(-8.0, 8.0, 200)),
        ("Cauchy(a=0, b=1)", "cauchy", (0.0, 1.0), np.linspace(-10.0, 10.0, 200)),
        ("Cauchy(a=2, b=0.5)", "cauchy", (2.0, 0.5), np.linspace(-5.0, 9.0, 200)),
    ]
    return [(label, MAPPINGS[fam](*args), reference_logpdf(fam, *args), grid)
            for label, fam, args, grid in cases]


MAPPINGS = {
    "weibull": map_weibull,
    "generalized_gamma": map_generalized_gamma,
    "gamma": map_gamma,
    "exponential": map_exponential,
    "weibull_gg": map_weibull_gg,
    "chi_squared": map_chi_squared,
    "f": map_f,
    "lognormal": map_lognormal,
    "student_t": map_student_t,
    "cauchy": map_cauchy,
}


def mapping_gallery() -> list[dict]:
    """Check every mapping against its closed-form reference density."""
    rows = []
    for label, mapped, ref, grid in _gallery():
        dev = verify_mapping(mapped, ref, grid)
        rows.append(dict(case=label, family=mapped.name, deviation=dev,
                         weight_sum=weight_sum(mapped.params),
                         passed=dev <= EQUIVALENCE_TOL, params=mapped.params.as_dict()))
    return rows
