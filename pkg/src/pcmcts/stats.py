"""Success-rate statistics shared by the harness and acceptance checks."""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class RateSummary:
    """Mean success rate of ``n`` Bernoulli indicators.

    ``sigma`` is the sample standard deviation (n - 1 denominator) of the
    indicators; ``sem`` is ``sigma / sqrt(n)``, the deviation of the mean.
    """
    n: int
    successes: int
    mean: float
    sigma: float
    sem: float

    @property
    def band(self) -> tuple[float, float]:
        return self.mean - 2 * self.sigma, self.mean + 2 * self.sigma

    @property
    def sem_band(self) -> tuple[float, float]:
        return self.mean - 2 * self.sem, self.mean + 2 * self.sem


def summarize(indicators: Iterable[bool | int | float]) -> RateSummary:
    values = [float(v) for v in indicators]
    if not values:
        raise ValueError("cannot summarize an empty sample")
    n = len(values)
    mean = math.fsum(values) / n
    sigma = statistics.stdev(values) if n > 1 else 0.0
    return RateSummary(n=n, successes=int(round(math.fsum(values))), mean=mean,
                       sigma=sigma, sem=sigma / math.sqrt(n))


def sample_std(values: Iterable[float]) -> float:
    values = list(values)
    return statistics.stdev(values) if len(values) > 1 else 0.0


def clears_band(candidate: float, baseline: RateSummary, use_sem: bool = True) -> bool:
    """True if ``candidate`` lies strictly above the baseline's 2-sigma band."""
    upper = baseline.sem_band[1] if use_sem else baseline.band[1]
    return candidate > upper


def within_band(candidate: float, baseline: RateSummary, use_sem: bool = True) -> bool:
    lo, hi = baseline.sem_band if use_sem else baseline.band
    return lo <= candidate <= hi


def two_proportion_z(a: RateSummary, b: RateSummary) -> float:
    """Pooled two-proportion z statistic for ``a.mean - b.mean``."""
    pooled = (a.successes + b.successes) / (a.n + b.n)
    var = pooled * (1 - pooled) * (1 / a.n + 1 / b.n)
    if var == 0.0:
        return 0.0
    return (a.mean - b.mean) / math.sqrt(var)


def significantly_greater(a: RateSummary, b: RateSummary, alpha: float = 0.05) -> bool:
    """One-sided test that ``a`` has a higher success rate than ``b``."""
    z = two_proportion_z(a, b)
    p = 0.5 * math.erfc(z / math.sqrt(2))
    return p < alpha
