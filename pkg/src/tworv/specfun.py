"""Complex-valued gamma-family kernels.

The moment and normalizer formulas of the RMM family carry factors such
as ``(-1)**lam`` that are complex for non-integer ``lam``.  Everything here
uses the principal branch of the logarithm, ``Im(Log z)`` in ``(-pi, pi]``.

``upper_incomplete_gamma`` switches between a power series (small
``|x|``, or ``x`` close to the negative real axis) and a Lentz continued
fraction (large ``|x|``).  Both stop after ``MAX_ITER`` terms.
"""

from __future__ import annotations

import cmath
import math

import scipy.special as sc

from tworv.errors import DomainError, NumericalError

MAX_ITER = 10_000
EPS = 1e-16
_TINY = 1e-300
# Legendre's fraction slows down near the cut; past this angle use the series.
_CF_MAX_ARG = 0.9 * math.pi


def gamma_fn(s: float) -> float:
    """Euler gamma function for real ``s > 0``."""
    s = float(s)
    if not s > 0:
        raise DomainError(f"gamma_fn requires s > 0, got {s!r}")
    return math.gamma(s)


def _gamma_complex(s: complex) -> complex:
    if s.imag == 0.0:
        if s.real <= 0 and s.real == math.floor(s.real):
            raise DomainError(f"gamma pole at s={s.real!r}")
        return complex(math.gamma(s.real))
    return complex(sc.gamma(s))


def _canonical(z: complex) -> complex:
    # -0.0 imaginary parts would put Log on the lower lip of the cut
    return complex(z.real + 0.0, z.imag + 0.0)


def principal_power(base: complex, exponent: complex) -> complex:
    """Return ``exp(exponent * Log(base))`` on the principal branch.

    Examples
    --------
    >>> principal_power(-1, 2)
    (1+0j)
    """
    base = _canonical(complex(base))
    if base == 0:
        if complex(exponent).real > 0:
            return 0j
        raise DomainError("zero base with non-positive exponent")
    if exponent == 0:
        return 1 + 0j
    if exponent == 1:
        return base
    if exponent == 2:
        return base * base
    return cmath.exp(exponent * cmath.log(base))


def _lower_series(s: complex, x: complex, alternating: bool = False) -> complex:
    """Lower incomplete gamma by power series.

    The default form has non-increasing terms whenever ``|x| <= |s| + 1``.
    The alternating form is cancellation-free only near the negative real
    axis, where it is used for large ``|x|``.
    """
    if not alternating:
        # gamma(s, x) = x^s e^-x sum x^n / (s (s+1) ... (s+n))
        term = 1.0 / s
        total = term
        for n in range(1, MAX_ITER + 1):
            term *= x / (s + n)
            total += term
            if abs(term) <= EPS * abs(total):
                return principal_power(x, s) * cmath.exp(-x) * total
    else:
        # gamma(s, x) = x^s sum (-x)^n / (n! (s+n))
        mx = -x
        power = 1.0 + 0j
        total = 1.0 / s
        for n in range(1, MAX_ITER + 1):
            power *= mx / n
            term = power / (s + n)
            total += term
            if abs(term) <= EPS * abs(total):
                return principal_power(x, s) * total
    raise NumericalError(
        f"incomplete gamma series did not converge in {MAX_ITER} terms "
        f"(s={s!r}, x={x!r}, last partial sum={total!r})"
    )


def _upper_cf(s: complex, x: complex) -> complex:
    """Modified Lentz evaluation of Legendre's continued fraction."""
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= EPS:
            return cmath.exp(s * cmath.log(x) - x) * h
    raise NumericalError(
        f"incomplete gamma continued fraction did not converge in {MAX_ITER} "
        f"steps (s={s!r}, x={x!r}, last convergent={h!r})"
    )


def upper_incomplete_gamma(s: complex, x: complex) -> complex:
    """Upper incomplete gamma ``Gamma(s, x)`` for complex arguments.

    Parameters
    ----------
    s : complex
        Order.  Must not be a non-positive integer.
    x : complex
        Lower integration limit; ``t**(s-1)`` uses the principal branch.

    Returns
    -------
    complex
        ``int_x^inf t**(s-1) exp(-t) dt``.

    Raises
    ------
    DomainError
        At a pole of ``Gamma(s)``.
    NumericalError
        If neither expansion converges within ``MAX_ITER`` terms.
    """
    s = _canonical(complex(s))
    x = _canonical(complex(x))
    if s.imag == 0.0 and s.real <= 0 and s.real == math.floor(s.real):
        raise DomainError(f"upper_incomplete_gamma: s={s.real!r} is a non-positive integer")
    if x == 0:
        if s.real <= 0:
            raise DomainError("Gamma(s, 0) diverges for Re(s) <= 0")
        return _gamma_complex(s)
    if cmath.isinf(x):
        if x.real > 0:
            return 0j
        raise DomainError(f"upper_incomplete_gamma: unsupported limit x={x!r}")
    if x.imag == 0.0 and x.real > 700.0 and x.real > 700.0 + abs(s) * math.log(x.real):
        return 0j
    if abs(x) <= abs(s) + 1.0:
        return _gamma_complex(s) - _lower_series(s, x)
    if abs(cmath.phase(x)) < _CF_MAX_ARG:
        return _upper_cf(s, x)
    return _gamma_complex(s) - _lower_series(s, x, alternating=True)
