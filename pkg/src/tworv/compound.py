"""Random sums ``S = X_1 + ... + X_N`` of i.i.d. exponentials with geometric
count ``N``.

Two count conventions are supported:

``FromZero``
    ``P(N = n) = p (1 - p)**n`` for ``n >= 0``, with ``S = 0`` when ``N = 0``.
``FromOne``
    ``P(N = n) = p (1 - p)**(n - 1)`` for ``n >= 1``.  Then ``S`` is exactly
    exponential with rate ``rate * p`` for every ``p``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from tworv.errors import ParameterError


class SupportConvention(str, enum.Enum):
    FROM_ZERO = "FromZero"
    FROM_ONE = "FromOne"


@dataclass(frozen=True)
class RandomSumSpec:
    p: float
    rate: float = 1.0
    support_convention: SupportConvention = SupportConvention.FROM_ONE

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ParameterError(f"p must lie in (0, 1), got {self.p!r}")
        if not self.rate > 0:
            raise ParameterError(f"rate must be positive, got {self.rate!r}")
        object.__setattr__(self, "support_convention", SupportConvention(self.support_convention))

    def count_moments(self) -> tuple[float, float]:
        """``(E(N), Var(N))`` under the chosen convention."""
        p = self.p
        var = (1.0 - p) / (p * p)
        if self.support_convention is SupportConvention.FROM_ZERO:
            return (1.0 - p) / p, var
        return 1.0 / p, var


@dataclass(frozen=True)
class SimResult:
    n: int
    mean: float
    variance: float
    zero_fraction: float
    ks_stat: float


def random_sum_moments(E_X: float, Var_X: float, E_N: float, Var_N: float) -> tuple[float, float]:
    """Mean and variance of a random sum by the law of total variance."""
    if Var_X < 0 or Var_N < 0:
        raise ParameterError("variances must be non-negative")
    return E_X * E_N, E_N * Var_X + Var_N * E_X * E_X


def geometric_exponential_moments(spec: RandomSumSpec) -> tuple[float, float]:
    """Closed-form ``(E(S), Var(S))`` for exponential summands.

    ``FromZero`` gives ``((1-p)/(r p), (1-p)(1+p)/(r p)**2)``; ``FromOne``
    gives ``(1/(r p), 1/(r p)**2)``.
    """
    p, r = spec.p, spec.rate
    if spec.support_convention is SupportConvention.FROM_ZERO:
        m = (1.0 - p) / (r * p)
        return m, m * ((1.0 + p) / (r * p))
    m = 1.0 / (r * p)
    return m, m * m


def exponential_cdf(rate: float) -> Callable:
    return lambda x: -np.expm1(-rate * np.maximum(x, 0.0))


def ks_statistic(samples, cdf: Callable) -> float:
    """Two-sided Kolmogorov-Smirnov distance ``sup |F_n - F|``.

    Raises
    ------
    ParameterError
        If ``samples`` is empty.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ParameterError("ks_statistic needs at least one sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_critical_value(n: int, level: float = 0.01) -> float:
    """Asymptotic Kolmogorov critical value ``sqrt(-log(level/2)/2) / sqrt(n)``."""
    if not 0 < level < 1:
        raise ParameterError(f"level must lie in (0, 1), got {level!r}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return math.sqrt(-math.log(level / 2.0) / 2.0) / math.sqrt(n)


def _draw_counts(rng: np.random.Generator, spec: RandomSumSpec, n: int) -> np.ndarray:
    # inverse CDF of the FromZero geometric; 1 - U keeps the log finite
    u = 1.0 - rng.random(n)
    counts = np.floor(np.log(u) / math.log1p(-spec.p)).astype(np.int64)
    if spec.support_convention is SupportConvention.FROM_ONE:
        counts += 1
    return counts


def simulate_random_sum(spec: RandomSumSpec, n: int, seed: int):
    """Simulate ``n`` replicates of ``S``.

    Returns
    -------
    SimResult
        Sample moments, the fraction of exact zeros and the KS distance to
        the exponential with the closed-form mean.
    numpy.ndarray
        The ``n`` simulated sums.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    counts = _draw_counts(rng, spec, n)
    draws = rng.exponential(1.0 / spec.rate, size=int(counts.sum()))
    owner = np.repeat(np.arange(n), counts)
    sums = np.bincount(owner, weights=draws, minlength=n)
    mean_s = geometric_exponential_moments(spec)[0]
    result = SimResult(
        n=n,
        mean=float(sums.mean()),
        variance=float(sums.var(ddof=1)) if n > 1 else 0.0,
        zero_fraction=float(np.mean(counts == 0)),
        ks_stat=ks_statistic(sums, exponential_cdf(1.0 / mean_s)),
    )
    return result, sums


def discrepancy_report(rate: float = 1.0) -> str:
    """Contrast the two conventions at ``p = 1/2``, where the mean and the
    standard deviation of an exponential coincide."""
    lines = [f"p = 0.5, rate = {rate!r}"]
    for conv in SupportConvention:
        m, v = geometric_exponential_moments(RandomSumSpec(0.5, rate, conv))
        sd = math.sqrt(v)
        verdict = "mean == sd" if math.isclose(m, sd, rel_tol=1e-12) else "mean != sd"
        lines.append(f"{conv.value}: E(S) = {m!r}, sd(S) = {sd!r}, {verdict}")
    lines.append(
        "FromZero moments put an atom of mass p at S = 0 and give sd = sqrt(3) * mean, "
        "so S is not exponential; FromOne gives an exponential with rate rate * p for every p."
    )
    return "\n".join(lines)
