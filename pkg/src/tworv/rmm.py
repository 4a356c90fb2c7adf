"""Univariate RMM density family.

A member is ``f(z) = kappa * exp(-(alpha/lam) * (z**lam - 1))`` on the
mode-standardized scale ``z = (x - M) / sigma`` with support ``[-L, inf)``.
Exponential (alpha=1, lam=1, L=0) and normal (alpha=1, lam=2, L=inf) are
members; the Pareto, power-function and uniform laws appear as limits.

Two readings of ``z**lam`` for ``z < 0`` are supported:

``"even"`` (default)
    ``|z|**lam``.  The density peaks at ``z = 0`` for every ``lam > 0`` and
    all moments are real.
``"principal"``
    ``exp(lam * Log z)`` on the principal branch.  Real only for integer
    ``lam``; otherwise evaluation raises :class:`~tworv.errors.DomainError`
    (pdf) or :class:`~tworv.errors.BranchError` (moments).

Moments and the normalizer are evaluated from the closed form in complex
arithmetic, where the sign factor ``(-1)**lam`` is the principal power for
``"principal"`` and ``1`` for ``"even"``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from tworv.errors import (
    BranchError,
    ConsistencyError,
    DomainError,
    NumericalError,
    ParameterError,
)
from tworv.specfun import gamma_fn, principal_power, upper_incomplete_gamma

UL = 4.0
LOG_LIMIT = 1e-6
NORMAL_L = 40.0
BRANCH_TOL = 1e-9
QUAD_TOL = 1e-6
BRANCHES = ("even", "principal")


def _check_branch(branch: str) -> None:
    if branch not in BRANCHES:
        raise ParameterError(f"branch must be one of {BRANCHES}, got {branch!r}")


def _check_box(alpha: float, lam: float, L: float, ul: float = UL) -> None:
    if not (math.isfinite(alpha) and alpha >= 0):
        raise ParameterError(f"alpha must be finite and >= 0, got {alpha!r}")
    if not (0 <= lam <= ul):
        raise ParameterError(f"lambda must lie in [0, {ul}], got {lam!r}")
    if not L >= 0:
        raise ParameterError(f"L must be >= 0, got {L!r}")


def _log_limit_kind(alpha: float) -> str:
    if alpha > 1:
        return "pareto"
    if 0 < alpha < 1:
        return "power"
    raise ParameterError(
        f"lambda -> 0 limit needs alpha > 1 (Pareto) or alpha < 1 (power), got {alpha!r}"
    )


@dataclass(frozen=True)
class RmmParams:
    """Parameter vector of one RMM member.

    Use :meth:`make` to obtain ``kappa`` from :func:`normalizer`.
    """

    alpha: float
    lam: float
    L: float
    kappa: float
    branch: str = "even"

    def __post_init__(self):
        _check_branch(self.branch)
        _check_box(self.alpha, self.lam, self.L)
        if not self.kappa > 0:
            raise ParameterError(f"kappa must be positive, got {self.kappa!r}")

    @classmethod
    def make(cls, alpha: float, lam: float, L: float = 0.0, branch: str = "even",
             verify: bool = False) -> "RmmParams":
        kappa = normalizer(alpha, lam, L, branch=branch, verify=verify)
        return cls(float(alpha), float(lam), float(L), kappa, branch)

    @property
    def is_uniform(self) -> bool:
        return self.alpha == 0

    @property
    def is_log_limit(self) -> bool:
        return self.lam < LOG_LIMIT and self.alpha != 0

    @property
    def support(self) -> tuple[float, float]:
        if self.is_uniform:
            return 0.0, 1.0 / self.kappa
        if self.is_log_limit:
            if _log_limit_kind(self.alpha) == "pareto":
                return 1.0, math.inf
            return 0.0, 1.0
        return -self.L, math.inf


@dataclass(frozen=True)
class Standardization:
    """Mode-centred affine map ``z = (x - mode) / sigma``."""

    mode: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma!r}")


def standardize(x, s: Standardization):
    return (np.asarray(x, dtype=float) - s.mode) / s.sigma if np.ndim(x) else (x - s.mode) / s.sigma


def destandardize(z, s: Standardization):
    return s.mode + s.sigma * np.asarray(z, dtype=float) if np.ndim(z) else s.mode + s.sigma * z


def _power_term(z: float, lam: float, branch: str) -> float:
    """``z**lam`` under the selected reading for negative ``z``."""
    if z >= 0:
        return z ** lam
    if branch == "even":
        return (-z) ** lam
    w = principal_power(complex(z), lam)
    if abs(w.imag) > BRANCH_TOL * (1.0 + abs(w.real)):
        raise DomainError(
            f"z**lambda is not real on the principal branch at (z={z!r}, lambda={lam!r})"
        )
    return w.real


def _pdf_scalar(z: float, p: RmmParams) -> float:
    lo, hi = p.support
    if not (lo <= z <= hi) or (p.is_log_limit and z <= 0):
        return 0.0
    if p.is_uniform:
        return p.kappa
    if p.is_log_limit:
        return p.kappa * z ** (-p.alpha)
    return p.kappa * math.exp(-(p.alpha / p.lam) * (_power_term(z, p.lam, p.branch) - 1.0))


def rmm_pdf(z, params: RmmParams):
    """Density of an RMM member on the z-scale; zero outside the support.

    Accepts a scalar or an array of ``z`` values.
    """
    if np.ndim(z) == 0:
        return _pdf_scalar(float(z), params)
    z = np.asarray(z, dtype=float)
    return np.array([_pdf_scalar(v, params) for v in z.ravel()]).reshape(z.shape)


def mode_density(params: RmmParams) -> float:
    """Density at the mode ``z = 0``: ``kappa * exp(alpha/lam)``."""
    if params.is_uniform:
        return params.kappa
    if params.lam < LOG_LIMIT:
        raise ParameterError("mode density is undefined in the lambda -> 0 limit")
    return params.kappa * math.exp(params.alpha / params.lam)


def _closed_form_integral(k: int, alpha: float, lam: float, L: float, branch: str) -> complex:
    """``int_{-L}^inf z**k exp(-(alpha/lam)(z**lam - 1)) dz`` without ``kappa``."""
    s = (k + 1) / lam
    if branch == "principal":
        sign = principal_power(-1.0, lam)
        neg_l_pow = principal_power(complex(-L), lam) if L > 0 else 0j
    else:
        sign = 1 + 0j
        neg_l_pow = complex(L ** lam)
    c = alpha * sign / lam
    x = alpha * neg_l_pow / lam
    try:
        bracket = (-1) ** (k + 1) * upper_incomplete_gamma(s, x) + (
            principal_power(sign, s) + (-1) ** k
        ) * gamma_fn(s)
        return (1.0 / lam) * cmath.exp(alpha / lam) * principal_power(c, -s) * bracket
    except OverflowError as exc:
        raise NumericalError(
            f"moment closed form overflowed at (k={k}, alpha={alpha}, lambda={lam}, L={L})"
        ) from exc


def _check_real(value: complex, what: str, tol: float = BRANCH_TOL) -> float:
    if abs(value.imag) > tol * (1.0 + abs(value.real)):
        raise BranchError(
            f"{what}: imaginary residue {value.imag:.3e} exceeds {tol:g}*(1+|re|) "
            f"(re={value.real:.6g}); the branch of (-1)**lambda does not cancel here"
        )
    return value.real


def _special_moment(k: int, alpha: float, lam: float) -> float | None:
    if alpha == 0:
        return 1.0 / (k + 1)
    if lam < LOG_LIMIT:
        if _log_limit_kind(alpha) == "pareto":
            if k >= alpha - 1:
                raise DomainError(f"Pareto limit has no moment of order {k} for alpha={alpha}")
            return (alpha - 1) / (alpha - 1 - k)
        return (1 - alpha) / (k + 1 - alpha)
    return None


def quadrature_moment(k: int, params: RmmParams) -> float:
    """``int z**k rmm_pdf(z) dz`` by adaptive Gauss-Kronrod quadrature."""
    lo, hi = params.support
    f = lambda z: z ** k * _pdf_scalar(z, params)  # noqa: E731
    pieces = [(lo, 0.0), (0.0, hi)] if lo < 0 < hi else [(lo, hi)]
    total = 0.0
    for a, b in pieces:
        if a == b:
            continue
        val, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
        total += val
    return total


def normalizer(alpha: float, lam: float, L: float, branch: str = "even",
               verify: bool = True) -> float:
    """Normalizing constant ``kappa`` making the density integrate to one.

    ``alpha = 0`` is the uniform member, fixed at ``kappa = 1`` on ``[0, 1]``.
    In the ``lam -> 0`` limit the Pareto member lives on ``[1, inf)`` and the
    power-function member on ``(0, 1]``.

    Raises
    ------
    BranchError
        If the closed form keeps an imaginary residue above ``1e-9``.
    ConsistencyError
        If ``verify`` and quadrature of the density differs from one by more
        than ``1e-6``.
    """
    _check_branch(branch)
    _check_box(alpha, lam, L)
    if alpha == 0:
        return 1.0
    if lam < LOG_LIMIT:
        return abs(alpha - 1.0) if _log_limit_kind(alpha) else 1.0
    integral = _closed_form_integral(0, alpha, lam, L, branch)
    kappa = _check_real(1.0 / integral, "normalizer")
    if not kappa > 0:
        raise BranchError(f"normalizer produced non-positive kappa={kappa!r}")
    if verify:
        mass = quadrature_moment(0, RmmParams(alpha, lam, L, kappa, branch))
        if abs(mass - 1.0) > QUAD_TOL:
            raise ConsistencyError(
                f"normalizer: quadrature mass {mass:.12g} != 1 at "
                f"(alpha={alpha}, lambda={lam}, L={L}, branch={branch})"
            )
    return kappa


def raw_moment_complex(k: int, alpha: float, lam: float, L: float,
                       branch: str = "even") -> complex:
    """Closed-form ``E(Z**k)`` before the imaginary part is discarded."""
    _check_branch(branch)
    _check_box(alpha, lam, L)
    special = _special_moment(k, alpha, lam)
    if special is not None:
        return complex(special)
    if k == 0:
        return 1 + 0j
    return _closed_form_integral(k, alpha, lam, L, branch) / _closed_form_integral(
        0, alpha, lam, L, branch
    )


def raw_moment(k: int, alpha: float, lam: float, L: float, branch: str = "even",
               verify: bool = True) -> float:
    """Non-central moment ``E(Z**k)`` of the normalized member.

    The closed form is evaluated in complex arithmetic and its real part is
    returned once the imaginary residue is below ``1e-9 * (1 + |re|)``.
    With ``verify`` the value is checked against quadrature to ``1e-6``
    relative.

    Examples
    --------
    >>> round(raw_moment(2, 1.0, 1.0, 0.0), 12)
    2.0
    """
    if k < 0 or int(k) != k:
        raise ParameterError(f"moment order must be a non-negative integer, got {k!r}")
    k = int(k)
    value = _check_real(raw_moment_complex(k, alpha, lam, L, branch), f"E(Z^{k})")
    if verify:
        kappa = normalizer(alpha, lam, L, branch=branch, verify=False)
        quad = quadrature_moment(k, RmmParams(alpha, lam, L, kappa, branch))
        if abs(quad - value) > QUAD_TOL * max(1.0, abs(quad)):
            raise ConsistencyError(
                f"E(Z^{k}) closed form {value:.12g} vs quadrature {quad:.12g} at "
                f"(alpha={alpha}, lambda={lam}, L={L}, branch={branch})"
            )
    return value


def standardized_mean_and_square(alpha: float, lam: float, L: float, branch: str = "even",
                                 verify: bool = True) -> tuple[float, float]:
    """``(E(Z), E(Z**2))``; for a mode-standardized variable these equal
    ``(d, 1 + d**2)`` with ``d = (mean - mode) / sd``."""
    return (
        raw_moment(1, alpha, lam, L, branch, verify),
        raw_moment(2, alpha, lam, L, branch, verify),
    )


def standardized_variance(alpha: float, lam: float, L: float, branch: str = "even") -> float:
    m1, m2 = standardized_mean_and_square(alpha, lam, L, branch, verify=False)
    return m2 - m1 * m1


def unit_variance_L(alpha: float, lam: float, branch: str = "even",
                    L_max: float = NORMAL_L) -> float:
    """Lower-support ratio ``L`` at which ``Var(Z) = 1``.

    ``Var(Z)`` grows with ``L`` for the even reading, so the root is
    bracketed on ``[0, L_max]``.  Returns 0 when ``Var(Z)`` is already one
    at ``L = 0`` to within ``1e-12``.

    Raises
    ------
    ParameterError
        If no ``L`` in ``[0, L_max]`` gives unit variance.
    """
    g = lambda L: standardized_variance(alpha, lam, L, branch) - 1.0  # noqa: E731
    g0 = g(0.0)
    if abs(g0) <= 1e-12:
        return 0.0
    g1 = g(L_max)
    if g0 > 0 or g1 < 0:
        raise ParameterError(
            f"no L in [0, {L_max}] gives unit variance for alpha={alpha}, lambda={lam} "
            f"(Var(Z) spans [{g0 + 1:.6g}, {g1 + 1:.6g}])"
        )
    if abs(g1) <= 1e-12:
        # variance saturates long before L_max; take the first L where it does
        return optimize.brentq(lambda L: g(L) + 1e-13, 0.0, L_max, xtol=1e-14)
    return optimize.brentq(g, 0.0, L_max, xtol=1e-14, rtol=1e-14)


def rmm_cdf(z, params: RmmParams):
    """Distribution function for the even reading (and wherever it coincides
    with the principal one), via regularized incomplete gamma."""
    import scipy.special as sc

    p = params
    if p.branch == "principal" and p.L > 0 and p.lam != 2:
        raise DomainError("rmm_cdf supports the principal branch only for L = 0 or lambda = 2")
    z = np.asarray(z, dtype=float)
    lo, hi = p.support
    if p.is_uniform:
        out = np.clip((z - lo) / (hi - lo), 0.0, 1.0)
    elif p.is_log_limit:
        if _log_limit_kind(p.alpha) == "pareto":
            out = np.where(z <= 1, 0.0, 1.0 - np.maximum(z, 1.0) ** (1.0 - p.alpha))
        else:
            out = np.clip(np.maximum(z, 0.0), 0.0, 1.0) ** (1.0 - p.alpha)
    else:
        s = 1.0 / p.lam
        rate = p.alpha / p.lam
        left = sc.gammainc(s, rate * p.L ** p.lam) if p.L > 0 else 0.0
        t = rate * np.abs(z) ** p.lam
        part = sc.gammainc(s, t)
        out = np.where(z >= 0, left + part, left - part) / (1.0 + left)
        out = np.where(z < -p.L, 0.0, out)
    return float(out) if out.ndim == 0 else out


def rmm_ppf(q, params: RmmParams):
    """Inverse of :func:`rmm_cdf` (even reading)."""
    import scipy.special as sc

    p = params
    q = np.asarray(q, dtype=float)
    if p.is_uniform:
        lo, hi = p.support
        out = lo + q * (hi - lo)
    elif p.is_log_limit:
        if _log_limit_kind(p.alpha) == "pareto":
            out = (1.0 - q) ** (1.0 / (1.0 - p.alpha))
        else:
            out = q ** (1.0 / (1.0 - p.alpha))
    else:
        if p.branch == "principal" and p.L > 0 and p.lam != 2:
            raise DomainError("rmm_ppf supports the principal branch only for L = 0 or lambda = 2")
        s = 1.0 / p.lam
        rate = p.alpha / p.lam
        left = sc.gammainc(s, rate * p.L ** p.lam) if p.L > 0 else 0.0
        target = q * (1.0 + left) - left
        mag = (sc.gammaincinv(s, np.abs(target)) / rate) ** (1.0 / p.lam)
        out = np.where(target >= 0, mag, -mag)
    return float(out) if out.ndim == 0 else out


class Preset(str, enum.Enum):
    EXPONENTIAL = "exponential"
    NORMAL = "normal"
    PARETO = "pareto"
    POWER_FUNCTION = "power"
    UNIFORM = "uniform"


def preset(name: str | Preset, alpha: float | None = None) -> RmmParams:
    """Named members: exponential, normal (``L = 40`` stands for infinity),
    Pareto and power function (``lam = 0`` limit, ``alpha`` required) and
    uniform (``alpha = 0``, ``kappa = 1``)."""
    try:
        which = Preset(name.lower() if isinstance(name, str) else name)
    except ValueError:
        raise ParameterError(f"unknown preset {name!r}; choose from {[p.value for p in Preset]}")
    if which is Preset.EXPONENTIAL:
        return RmmParams.make(1.0, 1.0, 0.0)
    if which is Preset.NORMAL:
        return RmmParams.make(1.0, 2.0, NORMAL_L)
    if which is Preset.UNIFORM:
        return RmmParams(0.0, 1.0, 0.0, 1.0)
    if alpha is None:
        raise ParameterError(f"preset {which.value!r} needs alpha")
    if which is Preset.PARETO and not alpha > 1:
        raise ParameterError(f"Pareto preset requires alpha > 1, got {alpha}")
    if which is Preset.POWER_FUNCTION and not 0 < alpha < 1:
        raise ParameterError(f"power-function preset requires 0 < alpha < 1, got {alpha}")
    return RmmParams.make(float(alpha), 0.0, 0.0)
