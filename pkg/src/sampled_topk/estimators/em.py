"""Maximum likelihood for the global rank pmf via EM on a mixture of binomials.

Observations are collapsed to distinct patterns (a sampled rank for fixed-size
runs, a ``(rank, sample size)`` pair for adaptive runs), so an iteration costs
``O(N * patterns)`` instead of ``O(N * M)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..core import (
    DegenerateLikelihood,
    InvalidSampleSize,
    RankPmf,
    SampledEvalError,
    SampledRankSet,
    SamplingScheme,
)
from ..sampling import _log_conditional_rows, conditional_matrix


def ap_weight(C: float = 10.0) -> Callable[[np.ndarray], np.ndarray]:
    """``w(r) = C / r``, the AP metric function at ``r / C`` without cutoff."""
    return lambda r: C / np.asarray(r, dtype=float)


def ndcg_weight(C: float = 10.0) -> Callable[[np.ndarray], np.ndarray]:
    """``w(r) = 1 / log2(r / C + 1)``."""
    return lambda r: 1.0 / np.log2(np.asarray(r, dtype=float) / C + 1.0)


class EmInit(str, enum.Enum):
    UNIFORM = "uniform"
    CUSTOM = "custom"


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 200
    rel_tol: float = 1e-7
    init: EmInit = EmInit.UNIFORM
    init_pmf: Optional[RankPmf] = None
    weight_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    scheme: SamplingScheme = SamplingScheme.WITH_REPLACEMENT

    def __post_init__(self):
        object.__setattr__(self, "init", EmInit(self.init))
        object.__setattr__(self, "scheme", SamplingScheme(self.scheme))
        if self.max_iters < 1:
            raise SampledEvalError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise SampledEvalError("rel_tol must be > 0")
        if self.init is EmInit.CUSTOM and self.init_pmf is None:
            raise SampledEvalError("custom init needs init_pmf")


@dataclass
class EmFit:
    pmf: RankPmf
    loglik: list
    n_iter: int
    converged: bool


def _pattern_weights(counts: np.ndarray, pattern_ranks: np.ndarray, cfg: EmConfig) -> np.ndarray:
    w = np.ones(counts.size) if cfg.weight_fn is None else np.asarray(
        cfg.weight_fn(pattern_ranks), dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise SampledEvalError("weights must be finite and nonnegative")
    wc = counts * w
    total = wc.sum()
    if total <= 0:
        raise SampledEvalError("weights are all zero on the observed ranks")
    return wc / total


def _init(n_items: int, cfg: EmConfig) -> np.ndarray:
    if cfg.init is EmInit.CUSTOM:
        if cfg.init_pmf.n_items != n_items:
            raise SampledEvalError("init pmf has the wrong length")
        return np.array(cfg.init_pmf.probs, dtype=float)
    return np.full(n_items, 1.0 / n_items)


def em_iterate(L: np.ndarray, weights: np.ndarray, pi0: np.ndarray, max_iters: int,
               rel_tol: float) -> tuple[np.ndarray, list, bool]:
    """Run EM on likelihood columns ``L[R, p] = P(pattern p | R)``.

    ``weights`` are normalised pattern weights. Returns the final mixture,
    the per-iterate weighted mean log-likelihood (first entry is for
    ``pi0``) and whether the relative change fell below ``rel_tol``.
    """
    pi = pi0.copy()
    mix = pi @ L
    if np.any(mix[weights > 0] <= 0):
        raise DegenerateLikelihood("an observed pattern has zero probability under the start pmf")
    ll = [float(weights @ np.log(mix, where=mix > 0, out=np.zeros_like(mix)))]
    converged = False
    for _ in range(max_iters):
        ratio = np.divide(weights, mix, out=np.zeros_like(mix), where=weights > 0)
        pi = pi * (L @ ratio)
        pi /= pi.sum()
        mix = pi @ L
        if np.any(mix[weights > 0] <= 0):
            raise DegenerateLikelihood("likelihood collapsed to zero for an observed pattern")
        ll.append(float(weights @ np.log(mix, where=mix > 0, out=np.zeros_like(mix))))
        if abs(ll[-1] - ll[-2]) < rel_tol * abs(ll[-2]):
            converged = True
            break
    return pi, ll, converged


def em_fit(samples: SampledRankSet, n_items: int, cfg: EmConfig = EmConfig()) -> EmFit:
    """EM fit on a fixed-size sampled set."""
    n = samples.sample_size
    if n < 2:
        raise InvalidSampleSize("sample size must be >= 2")
    A = conditional_matrix(n_items, n, cfg.scheme)
    counts = np.bincount(samples.ranks, minlength=n + 1)[1:].astype(float)
    seen = np.flatnonzero(counts)
    w = _pattern_weights(counts[seen], seen + 1, cfg)
    pi, ll, conv = em_iterate(A[:, seen], w, _init(n_items, cfg), cfg.max_iters, cfg.rel_tol)
    return EmFit(RankPmf.from_weights(pi), ll, len(ll) - 1, conv)


def mle_em(samples: SampledRankSet, n_items: int, cfg: EmConfig = EmConfig()) -> RankPmf:
    return em_fit(samples, n_items, cfg).pmf


def adaptive_em_fit(samples: SampledRankSet, n_items: int, cfg: EmConfig = EmConfig()) -> EmFit:
    """EM where each user carries its own sample size ``n_u``.

    Patterns are distinct ``(n, r)`` pairs ordered by ``n`` then ``r``; with a
    single ``n`` this is exactly the fixed-size problem.
    """
    pairs, counts = np.unique(
        np.stack([samples.sample_sizes, samples.ranks], axis=1), axis=0, return_counts=True
    )
    columns = []
    for n in np.unique(pairs[:, 0]):
        rs = pairs[pairs[:, 0] == n, 1]
        if n <= n_items or cfg.scheme is SamplingScheme.WITH_REPLACEMENT:
            columns.append(conditional_matrix(n_items, int(n), cfg.scheme)[:, rs - 1])
        else:
            raise InvalidSampleSize(f"n={n} exceeds N without replacement")
    L = np.concatenate(columns, axis=1)
    w = _pattern_weights(counts.astype(float), pairs[:, 1], cfg)
    pi, ll, conv = em_iterate(L, w, _init(n_items, cfg), cfg.max_iters, cfg.rel_tol)
    return EmFit(RankPmf.from_weights(pi), ll, len(ll) - 1, conv)


def adaptive_mle_em(samples: SampledRankSet, n_items: int, cfg: EmConfig = EmConfig()) -> RankPmf:
    return adaptive_em_fit(samples, n_items, cfg).pmf


def log_likelihood(pmf: RankPmf, samples: SampledRankSet,
                   scheme=SamplingScheme.WITH_REPLACEMENT) -> float:
    """Total log-likelihood of the sampled ranks under mixture weights ``pmf``."""
    total = 0.0
    for n in np.unique(samples.sample_sizes):
        sel = samples.sample_sizes == n
        rs, cnt = np.unique(samples.ranks[sel], return_counts=True)
        cols = np.exp(_log_conditional_rows(pmf.n_items, int(n), SamplingScheme(scheme),
                                            np.arange(1, pmf.n_items + 1)))[:, rs - 1]
        total += float(cnt @ np.log(pmf.probs @ cols))
    return total
