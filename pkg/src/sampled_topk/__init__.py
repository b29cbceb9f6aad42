"""Top-K ranking metrics from item-sampled test data."""
from .core import (
    GlobalRankSet,
    MetricKind,
    MetricSpec,
    RankPmf,
    SampledEvalError,
    SampledRankSet,
    SamplingScheme,
    validate_rank_set,
)
from .estimators import Method, estimate
from .harness import ExperimentConfig, run_experiment
from .mapping import MappingKind, MappingSpec, map_curve, map_k
from .metrics import global_metric, metric_curve, metric_from_pmf, sampled_metric
from .sampling import AdaptiveConfig, adaptive_sample, expected_sampled_recall, sample_ranks

__all__ = [
    "AdaptiveConfig", "ExperimentConfig", "GlobalRankSet", "MappingKind", "MappingSpec",
    "Method", "MetricKind", "MetricSpec", "RankPmf", "SampledEvalError", "SampledRankSet",
    "SamplingScheme", "adaptive_sample", "estimate", "expected_sampled_recall",
    "global_metric", "map_curve", "map_k", "metric_curve", "metric_from_pmf",
    "run_experiment", "sample_ranks", "sampled_metric", "validate_rank_set",
]
