"""Top-K metric functions and the global, sampled and pmf-derived metrics."""
from __future__ import annotations

from typing import Union

import numpy as np

from .core import (
    EmptySet,
    GlobalRankSet,
    MetricKind,
    MetricSpec,
    RankPmf,
    SampledEvalError,
    SampledRankSet,
)


def _gain(kind: MetricKind, ranks: np.ndarray) -> np.ndarray:
    """Per-rank score before the cutoff indicator is applied."""
    ranks = np.asarray(ranks, dtype=float)
    if kind is MetricKind.RECALL:
        return np.ones_like(ranks)
    if kind is MetricKind.NDCG:
        return 1.0 / np.log2(ranks + 1.0)
    if kind is MetricKind.AP:
        return 1.0 / ranks
    raise SampledEvalError(f"unknown metric kind {kind!r}")


def metric_fn(spec: MetricSpec, rank):
    """Simplified top-K metric function F(rank).

    Accepts a scalar rank or an array of ranks (returned elementwise).

    >>> metric_fn(MetricSpec("ap", 5), 4)
    0.25
    """
    r = np.asarray(rank)
    out = np.where(r <= spec.cutoff, _gain(spec.kind, r), 0.0)
    return float(out) if out.ndim == 0 else out


def metric_vector(spec: MetricSpec, length: int) -> np.ndarray:
    """``F(1..length)`` as a dense vector."""
    return metric_fn(spec, np.arange(1, length + 1))


def global_metric(ranks: GlobalRankSet, spec: MetricSpec) -> float:
    if ranks.n_users == 0:
        raise EmptySet("no users")
    return float(np.mean(metric_fn(spec, ranks.ranks)))


def sampled_metric(samples: SampledRankSet, spec: MetricSpec) -> float:
    if samples.n_users == 0:
        raise EmptySet("no users")
    return float(np.mean(metric_fn(spec, samples.ranks)))


def metric_from_pmf(pmf: RankPmf, spec: MetricSpec) -> float:
    K = min(spec.cutoff, pmf.n_items)
    return float(pmf.probs[:K] @ metric_vector(spec, K))


def empirical_pmf(ranks: GlobalRankSet) -> RankPmf:
    if ranks.n_users == 0:
        raise EmptySet("no users")
    counts = np.bincount(ranks.ranks, minlength=ranks.n_items + 1)[1:]
    return RankPmf(ranks.n_items, counts / ranks.n_users)


def metric_curve(
    source: Union[GlobalRankSet, SampledRankSet, RankPmf],
    kind: Union[MetricKind, str],
    K_max: int,
) -> np.ndarray:
    """Metric values for every cutoff ``K = 1..K_max``.

    Element ``K-1`` equals the single-cutoff metric at ``K``; the recall
    curve is the empirical CDF of the ranks.
    """
    kind = MetricKind(kind)
    if K_max < 1:
        raise SampledEvalError("K_max must be >= 1")
    if isinstance(source, RankPmf):
        mass = source.probs
    else:
        if source.n_users == 0:
            raise EmptySet("no users")
        mass = np.bincount(source.ranks)[1:] / source.n_users
    if mass.size < K_max:
        mass = np.concatenate([mass, np.zeros(K_max - mass.size)])
    mass = mass[:K_max]
    return np.cumsum(mass * _gain(kind, np.arange(1, K_max + 1)))


def relative_errors(estimates, truths) -> tuple[np.ndarray, int]:
    """``|est - true| / true`` per cutoff, skipping cutoffs whose truth is 0.

    Returns the kept errors and the number of skipped cutoffs.
    """
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    keep = tru > 0
    return np.abs(est[keep] - tru[keep]) / tru[keep], int((~keep).sum())


def average_relative_error(estimates, truths) -> float:
    errs, _ = relative_errors(estimates, truths)
    return float(errs.mean()) if errs.size else float("nan")
