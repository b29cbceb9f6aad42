"""Synthetic ground truth and the repeated-sampling experiment runner."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _rng
from .core import GlobalRankSet, MetricKind, MetricSpec, RankPmf, SampledEvalError, SamplingScheme
from .estimators import EmConfig, MesConfig, Method, adaptive_mle_em, estimate, mes, mle_em
from .estimators.adjusted import bv_solve, mn_solve
from .metrics import empirical_pmf, global_metric, metric_curve, metric_vector, relative_errors
from .sampling import AdaptiveConfig, adaptive_sample, conditional_matrix, sample_ranks

log = logging.getLogger(__name__)

ORACLE = "oracle"
REPORT_COLUMNS = ["estimator", "metric", "mean_rel_err_pct", "std_rel_err_pct", "mean_sample_size"]


def synth_rank_pmf(a: float, n_items: int) -> RankPmf:
    """Discretised ``Beta(a, 1)`` over ranks: mass proportional to ``x**(a-1) dx``.

    For ``a < 1`` the density diverges at ``x = 0``; the first cell instead
    receives the exact integral ``dx**a / a`` over ``[0, dx]``.
    """
    if not a > 0:
        raise SampledEvalError("a must be > 0")
    if n_items < 2:
        raise SampledEvalError("need at least two items")
    dx = 1.0 / (n_items - 1)
    x = np.arange(n_items) * dx
    w = np.empty(n_items)
    w[1:] = x[1:] ** (a - 1) * dx
    w[0] = dx**a / a if a < 1 else (1.0 if a == 1 else 0.0) * dx
    return RankPmf.from_weights(w)


def draw_population(pmf: RankPmf, n_users: int, seed: int) -> GlobalRankSet:
    if n_users < 1:
        raise SampledEvalError("n_users must be >= 1")
    gen = _rng.generator(seed, _rng.STREAM_POPULATION)
    ranks = gen.choice(pmf.n_items, size=n_users, p=pmf.probs) + 1
    return GlobalRankSet(pmf.n_items, ranks)


def repeat_seed(base_seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), *map(int, path)]).generate_state(1, np.uint64)[0])


@dataclass
class ExperimentConfig:
    n_items: int = 2000
    n_users: int = 25000
    beta_a: float = 0.5
    scheme: str = "with"
    sample_size: int = 100
    adaptive_n0: Optional[int] = None
    adaptive_n_max: Optional[int] = None
    estimators: list = field(default_factory=lambda: ["MLE", "MES", "BV", "MN_MES"])
    metrics: list = field(default_factory=lambda: ["recall"])
    k_min: int = 1
    k_max: int = 50
    repeats: int = 100
    base_seed: int = 0
    gamma: float = 0.01
    eta: float = 0.001

    def __post_init__(self):
        self.scheme = SamplingScheme(self.scheme).value
        if self.repeats < 1:
            raise SampledEvalError("repeats must be >= 1")
        if not 1 <= self.k_min <= self.k_max <= self.n_items:
            raise SampledEvalError("K range must lie within [1, N]")
        for name in self.estimators:
            if name != ORACLE:
                Method(name)
        for kind in self.metrics:
            MetricKind(kind)
        if Method.ADAPTIVE_MLE.value in self.estimators and self.adaptive is None:
            raise SampledEvalError("AdaptiveMLE needs adaptive_n0 and adaptive_n_max")

    @property
    def adaptive(self) -> Optional[AdaptiveConfig]:
        if self.adaptive_n0 is None or self.adaptive_n_max is None:
            return None
        return AdaptiveConfig(self.adaptive_n0, self.adaptive_n_max, self.scheme)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SampledEvalError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass
class ExperimentReport:
    """Mean and std (over repeats) of the K-averaged relative error, in percent."""

    rows: list
    per_repeat: dict
    skipped: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow([r["estimator"], r["metric"], f"{r['mean_rel_err_pct']:.6f}",
                        f"{r['std_rel_err_pct']:.6f}", f"{r['mean_sample_size']:.3f}"])
        return buf.getvalue()

    def lookup(self, estimator: str, metric: str = "recall") -> dict:
        for r in self.rows:
            if r["estimator"] == estimator and r["metric"] == metric:
                return r
        raise KeyError((estimator, metric))


def _metric_columns(kind: str, ks: np.ndarray, n_items: int) -> np.ndarray:
    return np.stack([metric_vector(MetricSpec(kind, int(k)), n_items) for k in ks], axis=1)


def estimate_curves(population: GlobalRankSet, cfg: ExperimentConfig, seed: int) -> tuple[dict, dict]:
    """Every configured estimator's metric values over the K range for one sampling seed.

    Returns ``{(estimator, metric): values}`` and ``{estimator: mean sample size}``.
    """
    N = cfg.n_items
    ks = np.arange(cfg.k_min, cfg.k_max + 1)
    scheme = SamplingScheme(cfg.scheme)
    em_cfg = EmConfig(scheme=scheme)
    mes_cfg = MesConfig(eta=cfg.eta, scheme=scheme)
    out, sizes = {}, {}

    fixed_needed = any(e not in (ORACLE, Method.ADAPTIVE_MLE.value) for e in cfg.estimators)
    samples = sample_ranks(population, cfg.sample_size, scheme, seed) if fixed_needed else None
    pmfs = {}

    def learned(name):
        if name not in pmfs:
            pmfs[name] = (mle_em(samples, N, em_cfg) if name == "MLE" else mes(samples, N, mes_cfg))
        return pmfs[name]

    for est in cfg.estimators:
        if est == ORACLE:
            pmf = empirical_pmf(population)
            for kind in cfg.metrics:
                out[(est, kind)] = metric_curve(pmf, kind, cfg.k_max)[ks - 1]
            sizes[est] = float(N)
            continue
        method = Method(est)
        if method is Method.ADAPTIVE_MLE:
            adaptive = adaptive_sample(population, cfg.adaptive, seed)
            pmf = adaptive_mle_em(adaptive, N, em_cfg)
            for kind in cfg.metrics:
                out[(est, kind)] = metric_curve(pmf, kind, cfg.k_max)[ks - 1]
            sizes[est] = float(adaptive.sample_sizes.mean())
            continue
        sizes[est] = float(cfg.sample_size)
        if method in (Method.MLE, Method.MES):
            pmf = learned(method.value)
            for kind in cfg.metrics:
                out[(est, kind)] = metric_curve(pmf, kind, cfg.k_max)[ks - 1]
            continue
        A = conditional_matrix(N, cfg.sample_size, scheme)
        p_tilde = samples.rank_distribution()
        if method is Method.BV:
            prior = RankPmf.uniform(N)
        else:
            prior = learned("MLE" if method.value.endswith("MLE") else "MES")
        for kind in cfg.metrics:
            F = _metric_columns(kind, ks, N)
            if method.value.startswith("BV"):
                f_hat = bv_solve(A, prior.probs, F, cfg.gamma)
            else:
                f_hat = mn_solve(A, prior.probs, F, samples.n_users)
            out[(est, kind)] = p_tilde @ f_hat
    return out, sizes


def _run_repeat(args):
    population, cfg, index = args
    seed = repeat_seed(cfg.base_seed, index)
    return estimate_curves(population, cfg, seed)


def true_curves(population: GlobalRankSet, cfg: ExperimentConfig) -> dict:
    ks = np.arange(cfg.k_min, cfg.k_max + 1)
    return {kind: metric_curve(population, kind, cfg.k_max)[ks - 1] for kind in cfg.metrics}


def build_population(cfg: ExperimentConfig) -> GlobalRankSet:
    return draw_population(synth_rank_pmf(cfg.beta_a, cfg.n_items), cfg.n_users, cfg.base_seed)


def run_experiment(cfg: ExperimentConfig, population: Optional[GlobalRankSet] = None,
                   workers: int = 1) -> ExperimentReport:
    """Repeat sample-and-estimate ``cfg.repeats`` times against one population.

    Repeat ``i`` uses a seed derived from ``(base_seed, i)``; results are
    reduced in repeat order, so the report does not depend on ``workers``.
    """
    population = build_population(cfg) if population is None else population
    truths = true_curves(population, cfg)
    jobs = [(population, cfg, i) for i in range(cfg.repeats)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_repeat, jobs))
    else:
        results = [_run_repeat(j) for j in jobs]

    per_repeat, skipped, rows = {}, {}, []
    for est in cfg.estimators:
        for kind in cfg.metrics:
            errs = []
            for curves, _ in results:
                e, skip = relative_errors(curves[(est, kind)], truths[kind])
                errs.append(100.0 * e.mean() if e.size else float("nan"))
            per_repeat[(est, kind)] = np.array(errs)
            skipped[(est, kind)] = skip
            if skip:
                log.info("%s/%s: skipped %d cutoffs with zero true metric", est, kind, skip)
            rows.append({
                "estimator": est,
                "metric": kind,
                "mean_rel_err_pct": float(np.mean(errs)),
                "std_rel_err_pct": float(np.std(errs)),
                "mean_sample_size": float(np.mean([s[est] for _, s in results])),
            })
    return ExperimentReport(rows, per_repeat, skipped)


def winner_accuracy(populations: Sequence[GlobalRankSet], cfg: ExperimentConfig,
                    spec: MetricSpec = MetricSpec("recall", 10)) -> dict:
    """Fraction of repeats in which each estimator picks the truly best population.

    All populations in a repeat share the sampling seed. Ties go to the
    lowest index for both truth and estimate.
    """
    if len(populations) < 2:
        raise SampledEvalError("need at least two populations")
    if len({p.n_items for p in populations}) != 1:
        raise SampledEvalError("populations must share N")
    truth = int(np.argmax([global_metric(p, spec) for p in populations]))
    scheme = SamplingScheme(cfg.scheme)
    hits = {est: 0 for est in cfg.estimators}
    for i in range(cfg.repeats):
        seed = repeat_seed(cfg.base_seed, i)
        values = {est: [] for est in cfg.estimators}
        for pop in populations:
            fixed = None
            for est in cfg.estimators:
                if est == ORACLE:
                    values[est].append(global_metric(pop, spec))
                elif est == Method.ADAPTIVE_MLE.value:
                    s = adaptive_sample(pop, cfg.adaptive, seed)
                    values[est].append(estimate(s, est, spec, scheme=scheme))
                else:
                    fixed = fixed or sample_ranks(pop, cfg.sample_size, scheme, seed)
                    values[est].append(estimate(fixed, est, spec, gamma=cfg.gamma,
                                                mes_cfg=MesConfig(eta=cfg.eta), scheme=scheme))
        for est in cfg.estimators:
            hits[est] += int(np.argmax(values[est])) == truth
    return {est: hits[est] / cfg.repeats for est in cfg.estimators}


def multinomial_variance_check(weights, theta, n_trials: int, draws: int, seed: int):
    """Monte-Carlo vs closed-form variance of ``sum_i w_i X_i``, ``X ~ Mult(M, theta)``.

    The closed form is ``M (sum w^2 theta - (sum w theta)^2)``. The z-score
    uses the normal-theory standard error ``var * sqrt(2 / (draws - 1))`` of
    a sample variance.
    """
    w = np.asarray(weights, dtype=float)
    th = np.asarray(theta, dtype=float)
    if draws < 1000:
        raise SampledEvalError("draws must be >= 1000")
    if th.shape != w.shape or np.any(th < 0) or abs(th.sum() - 1) > 1e-9:
        raise SampledEvalError("theta must be a pmf matching weights")
    gen = _rng.generator(seed, 5)
    counts = gen.multinomial(n_trials, th / th.sum(), size=draws)
    sums = counts @ w
    empirical = float(sums.var(ddof=1))
    scale = n_trials * float(w**2 @ th)
    analytic = n_trials * (float(w**2 @ th) - float(w @ th) ** 2)
    if analytic <= 1e-12 * max(scale, 1e-300):
        analytic = 0.0
        z = 0.0 if empirical <= 1e-12 * max(scale, 1e-300) else float("inf")
        return empirical, analytic, z
    se = analytic * np.sqrt(2.0 / (draws - 1))
    return empirical, analytic, float((empirical - analytic) / se)
