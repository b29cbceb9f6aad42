"""Mapping functions ``f(k)`` that place sampled Recall@k on the global axis.

The sampled recall at ``k`` is read as an estimate of the global recall at
``f(k)``. Four dataset-level mappings are provided:

* baseline -- ``E[r] <= k`` solved for ``R``;
* boundary -- midpoint of the Hoeffding lower/upper locations (floored);
* beta     -- recurrence obtained by matching increments of both sides
  under a ``Beta(a, 1)`` rank density;
* linear   -- the ``a = 1`` closed form ``k (N-1)/n + 1``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from .core import (
    GlobalRankSet,
    InvalidSampleSize,
    RankPmf,
    SampledEvalError,
    SampledRankSet,
    SizeMismatch,
)
from .metrics import metric_curve


class MappingKind(str, enum.Enum):
    BASELINE = "baseline"
    BOUNDARY = "boundary"
    BETA = "beta"
    LINEAR = "linear"


@dataclass(frozen=True)
class MappingSpec:
    kind: MappingKind
    n_items: int
    sample_size: int
    a: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MappingKind(self.kind))
        if not 2 <= self.sample_size <= self.n_items:
            raise InvalidSampleSize(f"need 2 <= n <= N, got n={self.sample_size}, N={self.n_items}")
        if not self.a > 0:
            raise SampledEvalError(f"beta parameter a must be > 0, got {self.a}")


def beta_recurrence(a: float, n_items: int, n: int) -> np.ndarray:
    """Real-valued ``f(1..n; a)`` from the Beta(a, 1) recurrence.

    Works on ``h(k) = ((f(k) - 1)/(N - 1))**a`` which starts at
    ``a B(a, n)`` and grows by ``a C(n-1, k) B(a+k, n-k)``; the increments
    sum to one, so ``f(n) = N``.
    """
    k = np.arange(0, n, dtype=float)
    # k = 0 term is a*B(a, n), i.e. h(1)
    log_inc = (
        np.log(a)
        + gammaln(n) - gammaln(k + 1) - gammaln(n - k)
        + betaln(a + k, n - k)
    )
    h = np.maximum(np.cumsum(np.exp(log_inc)), 0.0)
    return (n_items - 1) * h ** (1.0 / a) + 1.0


def map_curve(spec: MappingSpec) -> np.ndarray:
    """Unrounded ``f(1..n)``; strictly increasing in ``k``."""
    N, n = spec.n_items, spec.sample_size
    k = np.arange(1, n + 1, dtype=float)
    if spec.kind is MappingKind.BASELINE:
        return (k - 1) / (n - 1) * (N - 1) + 1
    if spec.kind is MappingKind.BOUNDARY:
        return (k - 0.5) * (N - 1) / (n - 1) + 0.5
    if spec.kind is MappingKind.LINEAR:
        return k * (N - 1) / n + 1
    return beta_recurrence(spec.a, N, n)


def _round_half_up(x):
    return np.floor(np.asarray(x) + 0.5)


def map_integer_curve(spec: MappingSpec) -> np.ndarray:
    """Integer locations ``f(1..n)`` clamped to ``[1, N]``.

    Boundary floors, as its closed form prescribes; the others round to
    nearest.
    """
    f = map_curve(spec)
    f = np.floor(f) if spec.kind is MappingKind.BOUNDARY else _round_half_up(f)
    return np.clip(f, 1, spec.n_items).astype(np.int64)


def map_k(spec: MappingSpec, k: int) -> int:
    if not 1 <= k <= spec.sample_size:
        raise SampledEvalError(f"k={k} outside [1, {spec.sample_size}]")
    return int(map_integer_curve(spec)[k - 1])


def align_error(global_ranks: GlobalRankSet, samples: SampledRankSet, spec: MappingSpec,
                K_range=None) -> tuple[np.ndarray, float]:
    """``|T^S_Recall@k - T_Recall@f(k)|`` for each ``k`` and its mean."""
    n = samples.sample_size
    if n != spec.sample_size or samples.n_items != spec.n_items or global_ranks.n_items != spec.n_items:
        raise SizeMismatch("samples, ranks and mapping disagree on n or N")
    ks = np.arange(1, n + 1) if K_range is None else np.asarray(list(K_range))
    sampled = metric_curve(samples, "recall", n)[ks - 1]
    global_curve = metric_curve(global_ranks, "recall", spec.n_items)
    f = map_integer_curve(spec)[ks - 1]
    err = np.abs(sampled - global_curve[f - 1])
    return err, float(err.mean())


def beta_relative_gap(a: float, n_items: int, n: int) -> np.ndarray:
    """``|f(k; a) - f(k; 1)| / f(k; 1)`` for ``k = 1..n``."""
    if not a > 0:
        raise SampledEvalError("a must be > 0")
    fa = beta_recurrence(a, n_items, n)
    f1 = beta_recurrence(1.0, n_items, n)
    return np.abs(fa - f1) / f1


def fit_beta_a(target: RankPmf, grid=None) -> float:
    """Grid-search ``a`` whose discretised Beta(a, 1) pmf best matches ``target``."""
    from .harness import synth_rank_pmf

    grid = np.round(np.arange(0.1, 1.01, 0.1), 10) if grid is None else np.asarray(grid)
    errs = [np.sum((synth_rank_pmf(a, target.n_items).probs - target.probs) ** 2) for a in grid]
    return float(grid[int(np.argmin(errs))])
