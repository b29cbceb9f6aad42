"""Planning and testing tools for evaluating on a subset of users."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.stats import norm

from . import _rng
from .core import DegeneratePool, GlobalRankSet, InvalidSubsetSize, MetricSpec, SampledEvalError
from .metrics import metric_fn


@dataclass(frozen=True)
class ConfidenceSpec:
    """Two-sided confidence level and its normal critical value ``z_{alpha/2}``."""

    level: float = 0.95
    z_half_alpha: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise SampledEvalError(f"confidence level must lie in (0, 1), got {self.level}")
        object.__setattr__(self, "z_half_alpha", float(norm.ppf(0.5 + self.level / 2)))

    @classmethod
    def from_alpha(cls, alpha: float) -> "ConfidenceSpec":
        return cls(1.0 - alpha)


def _round_size(x: float) -> int:
    # nearest integer, with a guard so 9604.0000000001 stays 9604
    return max(1, int(math.floor(x + 0.5 - 1e-9)))


def user_sampled_metric(ranks: GlobalRankSet, m: int, seed: int, spec: MetricSpec) -> float:
    """Metric over ``m`` users drawn uniformly without replacement."""
    if not 1 <= m <= ranks.n_users:
        raise InvalidSubsetSize(f"m={m} outside [1, {ranks.n_users}]")
    idx = _rng.generator(seed, _rng.STREAM_USERS).choice(ranks.n_users, size=m, replace=False)
    return float(metric_fn(spec, ranks.ranks[idx]).mean())


def moe_sample_size(p: float, e: float, conf: ConfidenceSpec = ConfidenceSpec()) -> int:
    """Users needed to estimate a proportion ``p`` within margin ``e``.

    ``p (1 - p) (z / e)**2`` rounded to the nearest integer, at least 1.

    >>> moe_sample_size(0.5, 0.03)
    1067
    """
    if not 0 < p < 1 or not e > 0:
        raise SampledEvalError("need 0 < p < 1 and e > 0")
    return _round_size(p * (1 - p) * (conf.z_half_alpha / e) ** 2)


def hoeffding_prob(m: int, t: float) -> float:
    """Hoeffding bound ``2 exp(-2 m t^2)`` on a deviation of at least ``t``."""
    if m < 1 or not t > 0:
        raise SampledEvalError("need m >= 1 and t > 0")
    return 2.0 * math.exp(-2.0 * m * t * t)


def hoeffding_confidence(m: int, t: float) -> float:
    """``1 - bound``, floored at 0 when the bound is vacuous."""
    return max(0.0, 1.0 - min(1.0, hoeffding_prob(m, t)))


def two_proportion_z(p1: float, p2: float, m: int) -> tuple[float, float]:
    """Pooled two-sample z statistic and its one-sided p-value for ``p1 < p2``."""
    if m < 1 or not (0 <= p1 <= 1 and 0 <= p2 <= 1):
        raise SampledEvalError("need m >= 1 and proportions in [0, 1]")
    p_bar = (p1 + p2) / 2
    q_bar = 1 - p_bar
    if p_bar <= 0 or p_bar >= 1:
        raise DegeneratePool(f"pooled proportion {p_bar} leaves zero variance")
    z = (p1 - p2) / math.sqrt(2 * p_bar * q_bar / m)
    return z, float(norm.cdf(z))


def two_model_sample_size(e: float, conf: ConfidenceSpec = ConfidenceSpec()) -> int:
    """Per-model users for comparing two models within margin ``e``: twice the one-model size."""
    return 2 * moe_sample_size(0.5, e, conf)


def bonferroni(alpha: float, k: int) -> float:
    if k < 1 or not 0 < alpha < 1:
        raise SampledEvalError("need k >= 1 and alpha in (0, 1)")
    return alpha / k
