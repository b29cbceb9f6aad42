"""Estimators of global top-K metrics from sampled ranks."""
from __future__ import annotations

import enum
from dataclasses import replace
from typing import Optional

from ..core import MetricSpec, RankPmf, SampledEvalError, SampledRankSet, SamplingScheme
from ..metrics import metric_from_pmf
from .adjusted import (
    DEFAULT_GAMMA,
    bv_metric,
    bv_rank_pmf,
    bv_solve,
    mn_loss,
    mn_metric,
    mn_solve,
    mn_system,
)
from .em import (
    EmConfig,
    EmFit,
    adaptive_em_fit,
    adaptive_mle_em,
    ap_weight,
    em_fit,
    log_likelihood,
    mle_em,
    ndcg_weight,
)
from .mes import MesConfig, mes, mes_objective, mes_solve


class Method(str, enum.Enum):
    MLE = "MLE"
    MES = "MES"
    BV = "BV"
    BV_MLE = "BV_MLE"
    BV_MES = "BV_MES"
    MN_MLE = "MN_MLE"
    MN_MES = "MN_MES"
    ADAPTIVE_MLE = "AdaptiveMLE"


def prior_pmf(samples: SampledRankSet, method: Method, em_cfg: EmConfig, mes_cfg: MesConfig) -> RankPmf:
    """The pmf a composite method feeds into BV or MN."""
    if method in (Method.BV_MLE, Method.MN_MLE, Method.MLE):
        return mle_em(samples, samples.n_items, em_cfg)
    if method in (Method.BV_MES, Method.MN_MES, Method.MES):
        return mes(samples, samples.n_items, mes_cfg)
    raise SampledEvalError(f"{method} has no learned prior")


def estimate(
    samples: SampledRankSet,
    method,
    spec: MetricSpec,
    *,
    prior: Optional[RankPmf] = None,
    gamma: float = DEFAULT_GAMMA,
    em_cfg: EmConfig = EmConfig(),
    mes_cfg: MesConfig = MesConfig(),
    scheme=None,
) -> float:
    """Estimate a global metric from sampled ranks with the named method.

    ``BV`` uses ``prior`` (uniform when omitted); ``BV_*`` and ``MN_*`` learn
    their prior with MLE or MES first. ``scheme``, when given, overrides the
    conditional model of every stage.
    """
    method = Method(method)
    if scheme is not None:
        em_cfg = replace(em_cfg, scheme=scheme)
        mes_cfg = replace(mes_cfg, scheme=scheme)
    scheme = em_cfg.scheme
    if method is Method.ADAPTIVE_MLE:
        return metric_from_pmf(adaptive_mle_em(samples, samples.n_items, em_cfg), spec)
    if not samples.is_fixed_size:
        raise SampledEvalError(f"{method.value} needs a fixed sample size")
    if method in (Method.MLE, Method.MES):
        return metric_from_pmf(prior_pmf(samples, method, em_cfg, mes_cfg), spec)
    if method is Method.BV:
        prior = prior if prior is not None else RankPmf.uniform(samples.n_items)
        return bv_metric(samples, prior, spec, gamma, scheme)[0]
    learned = prior_pmf(samples, method, em_cfg, mes_cfg)
    if method in (Method.BV_MLE, Method.BV_MES):
        return bv_metric(samples, learned, spec, gamma, scheme)[0]
    return mn_metric(samples, learned, samples.n_users, spec, scheme)[0]


__all__ = [
    "DEFAULT_GAMMA", "EmConfig", "EmFit", "MesConfig", "Method",
    "adaptive_em_fit", "adaptive_mle_em", "ap_weight", "bv_metric", "bv_rank_pmf",
    "bv_solve", "em_fit", "estimate", "log_likelihood", "mes", "mes_objective",
    "mes_solve", "mle_em", "mn_loss", "mn_metric", "mn_solve", "mn_system",
    "ndcg_weight", "prior_pmf",
]
