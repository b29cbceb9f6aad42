"""Forward model: sampled ranks from global ranks.

The conditional law of the sampled rank ``r`` given the global rank ``R`` is
``1 + Binomial(n-1, (R-1)/(N-1))`` when the ``n-1`` negatives are drawn with
replacement and ``1 + Hypergeometric(N-1, R-1, n-1)`` without replacement.
Both are evaluated through log-gamma so large ``n`` and ``N`` do not overflow.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from . import _rng
from .core import (
    GlobalRankSet,
    InvalidSampleSize,
    MismatchedConfig,
    RankPmf,
    SampledEvalError,
    SampledRankSet,
    SamplingScheme,
)

MAX_MATRIX_CELLS = 500_000_000
_CHUNK_CELLS = 4_000_000


def log_comb(a, b):
    """``log C(a, b)``, ``-inf`` outside ``0 <= b <= a``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ok = (b >= 0) & (b <= a)
    with np.errstate(invalid="ignore"):
        val = gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)
    return np.where(ok, val, -np.inf)


def log_binom_pmf(k, trials, theta):
    k = np.asarray(k, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return log_comb(trials, k) + xlogy(k, theta) + xlog1py(trials - k, -theta)


def log_hypergeom_pmf(k, population, good, draws):
    """Log pmf of ``k`` successes in ``draws`` from ``population`` with ``good`` successes."""
    return (
        log_comb(good, k)
        + log_comb(np.asarray(population) - good, np.asarray(draws) - k)
        - log_comb(population, draws)
    )


def _check_size(n_items: int, n: int, scheme: SamplingScheme) -> None:
    if n_items < 2:
        raise InvalidSampleSize("need at least two items")
    if n < 2:
        raise InvalidSampleSize(f"sample size must be >= 2, got {n}")
    if scheme is SamplingScheme.WITHOUT_REPLACEMENT and n > n_items:
        raise InvalidSampleSize(f"sample size {n} exceeds N={n_items} without replacement")


@dataclass(frozen=True)
class ConditionalRankModel:
    """P(r | R) for a sample of ``sample_size`` items out of ``n_items``.

    With replacement the sample size may exceed ``n_items``.
    """

    n_items: int
    sample_size: int
    scheme: SamplingScheme = SamplingScheme.WITH_REPLACEMENT

    def __post_init__(self):
        object.__setattr__(self, "scheme", SamplingScheme(self.scheme))
        _check_size(self.n_items, self.sample_size, self.scheme)

    def matrix(self) -> np.ndarray:
        return conditional_matrix(self.n_items, self.sample_size, self.scheme)


def _log_conditional_rows(n_items: int, n: int, scheme: SamplingScheme, R) -> np.ndarray:
    R = np.asarray(R, dtype=float)[:, None]
    x = np.arange(n, dtype=float)[None, :]  # r - 1
    if scheme is SamplingScheme.WITH_REPLACEMENT:
        return log_binom_pmf(x, n - 1, (R - 1) / (n_items - 1))
    return log_hypergeom_pmf(x, n_items - 1, R - 1, n - 1)


def conditional_pmf(model: ConditionalRankModel, R: int) -> np.ndarray:
    """``P(r | R)`` for ``r = 1..n``."""
    if not 1 <= R <= model.n_items:
        raise SampledEvalError(f"R={R} outside [1, {model.n_items}]")
    return np.exp(_log_conditional_rows(model.n_items, model.sample_size, model.scheme, [R])[0])


@lru_cache(maxsize=16)
def _cached_matrix(n_items: int, n: int, scheme: SamplingScheme) -> np.ndarray:
    mat = np.exp(_log_conditional_rows(n_items, n, scheme, np.arange(1, n_items + 1)))
    mat.setflags(write=False)
    return mat


def conditional_matrix(n_items: int, n: int, scheme=SamplingScheme.WITH_REPLACEMENT) -> np.ndarray:
    """Read-only ``N x n`` matrix with ``[R-1, r-1] = P(r | R)``, cached per arguments."""
    scheme = SamplingScheme(scheme)
    _check_size(n_items, n, scheme)
    if n_items * n > MAX_MATRIX_CELLS:
        raise SampledEvalError(f"N*n = {n_items * n} exceeds the {MAX_MATRIX_CELLS} cell guard")
    return _cached_matrix(int(n_items), int(n), scheme)


def _inverse_cdf(pmf_rows: np.ndarray, row_of_user: np.ndarray, u: np.ndarray) -> np.ndarray:
    """0-based outcome index per user, drawn by inversion of its pmf row."""
    cdf = np.cumsum(pmf_rows, axis=1)
    cdf /= cdf[:, -1:]
    cdf[:, -1] = 1.0
    width = cdf.shape[1]
    out = np.empty(u.size, dtype=np.int64)
    step = max(1, _CHUNK_CELLS // width)
    for lo in range(0, u.size, step):
        hi = lo + step
        out[lo:hi] = (cdf[row_of_user[lo:hi]] <= u[lo:hi, None]).sum(axis=1)
    return np.minimum(out, width - 1)


def _draw_from_rows(log_rows_fn, R: np.ndarray, u: np.ndarray) -> np.ndarray:
    distinct, inv = np.unique(R, return_inverse=True)
    rows = np.exp(log_rows_fn(distinct))
    return _inverse_cdf(rows, inv, u)


def sample_ranks(ranks: GlobalRankSet, n: int, scheme=SamplingScheme.WITH_REPLACEMENT,
                 seed: int = 0) -> SampledRankSet:
    """Draw one sampled rank per user with ``n - 1`` sampled negatives.

    Each user's draw uses its own counter-based stream, so results depend
    only on ``(seed, user index, R_u)``.
    """
    scheme = SamplingScheme(scheme)
    N = ranks.n_items
    _check_size(N, n, scheme)
    u = _rng.user_uniforms(seed, _rng.STREAM_FIXED, ranks.n_users, 1)[:, 0]
    x = _draw_from_rows(lambda R: _log_conditional_rows(N, n, scheme, R), ranks.ranks, u)
    return SampledRankSet(
        N, x + 1, np.full(ranks.n_users, n), user_ids=ranks.user_ids,
        allow_oversize=n > N,
    )


def expected_sampled_recall(pmf: RankPmf, n: int, K: int,
                            scheme=SamplingScheme.WITH_REPLACEMENT,
                            n_users: int = 1) -> tuple[float, float]:
    """Mean and variance of the sampled Recall@K over ``n_users`` users.

    Users with global rank ``R`` hit with probability ``Pr(r <= K | R)``;
    the variance is that of the Poisson-binomial average.
    """
    if not 1 <= K <= n:
        raise SampledEvalError(f"K={K} must lie in [1, n={n}]")
    A = conditional_matrix(pmf.n_items, n, scheme)
    hit = A[:, :K].sum(axis=1)
    hit = np.clip(hit, 0.0, 1.0)
    mean = float(pmf.probs @ hit)
    var = float(pmf.probs @ (hit * (1.0 - hit))) / n_users
    return mean, var


@dataclass(frozen=True)
class AdaptiveConfig:
    """Doubling schedule ``n0, 2*n0, ..., n_max``.

    Without replacement the samples are cumulative and distinct, so
    ``n_max`` may not exceed the item count; with replacement it may.
    """

    n0: int = 100
    n_max: int = 3200
    scheme: SamplingScheme = SamplingScheme.WITHOUT_REPLACEMENT

    def __post_init__(self):
        object.__setattr__(self, "scheme", SamplingScheme(self.scheme))
        if self.n0 < 2:
            raise InvalidSampleSize("n0 must be >= 2")
        ratio = self.n_max // self.n0
        if self.n_max < self.n0 or self.n_max % self.n0 or ratio & (ratio - 1):
            raise InvalidSampleSize(
                f"n_max={self.n_max} must be n0={self.n0} times a power of two"
            )

    @property
    def sizes(self) -> list[int]:
        out = [self.n0]
        while out[-1] < self.n_max:
            out.append(out[-1] * 2)
        return out

    def check_items(self, n_items: int) -> None:
        _check_size(n_items, self.n_max, self.scheme)


def adaptive_sample(ranks: GlobalRankSet, cfg: AdaptiveConfig, seed: int = 0) -> SampledRankSet:
    """Adaptive doubling: keep sampling while the target still ranks first.

    Each round draws ``n_u`` fresh items (``n_0 - 1`` in the first round)
    and re-ranks the target against everything drawn so far. A user only
    reaches round ``j`` if no earlier item beat the target, so the new rank
    is one plus the number of better items in the fresh batch.
    """
    N = ranks.n_items
    cfg.check_items(N)
    sizes = cfg.sizes
    u = _rng.user_uniforms(seed, _rng.STREAM_ADAPTIVE, ranks.n_users, len(sizes))
    R_all = ranks.ranks
    scheme = cfg.scheme

    r = _draw_from_rows(
        lambda R: _log_conditional_rows(N, sizes[0], scheme, R), R_all, u[:, 0]
    ) + 1
    n_u = np.full(ranks.n_users, sizes[0], dtype=np.int64)

    for j in range(1, len(sizes)):
        active = np.flatnonzero(r == 1)
        if active.size == 0:
            break
        prev, added = sizes[j - 1], sizes[j] - sizes[j - 1]
        x = np.arange(added + 1, dtype=float)[None, :]

        if scheme is SamplingScheme.WITH_REPLACEMENT:
            def rows(R, x=x, added=added):
                theta = (np.asarray(R, dtype=float)[:, None] - 1) / (N - 1)
                return log_binom_pmf(x, added, theta)
        else:
            def rows(R, x=x, prev=prev, added=added):
                good = np.asarray(R, dtype=float)[:, None] - 1
                return log_hypergeom_pmf(x, N - prev, good, added)

        r[active] = _draw_from_rows(rows, R_all[active], u[active, j]) + 1
        n_u[active] = sizes[j]

    return SampledRankSet(N, r, n_u, user_ids=ranks.user_ids, allow_oversize=cfg.n_max > N)


@dataclass(frozen=True, eq=False)
class CostProfile:
    """Average number of items sampled per user escaping at each size."""

    sizes: np.ndarray
    user_counts: np.ndarray
    costs: np.ndarray
    defined: np.ndarray


def cost_profile(samples: SampledRankSet, cfg: AdaptiveConfig) -> CostProfile:
    """Per-size sampling cost of an adaptive run.

    ``C_0 = M n_0 / m_0`` and ``C_j = (M - sum_{p<j} m_p)(n_j - n_{j-1}) / m_j``;
    the terminal size uses the same formula. Entries with ``m_j = 0`` are NaN
    and flagged undefined.
    """
    sizes = np.array(cfg.sizes, dtype=np.int64)
    if not np.all(np.isin(samples.sample_sizes, sizes)):
        raise MismatchedConfig("sample sizes are not on the configured doubling schedule")
    M = samples.n_users
    m = np.array([(samples.sample_sizes == s).sum() for s in sizes], dtype=np.int64)
    reached = M - np.concatenate([[0], np.cumsum(m)[:-1]])
    step = np.diff(np.concatenate([[0], sizes]))
    defined = m > 0
    costs = np.full(sizes.size, np.nan)
    costs[defined] = reached[defined] * step[defined] / m[defined]
    return CostProfile(sizes, m, costs, defined)
