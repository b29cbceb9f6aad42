"""Command-line entry point: ``sampled-topk <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .core import GlobalRankSet, MetricSpec, RankPmf, SampledEvalError, SamplingScheme
from .estimators import EmConfig, MesConfig, Method, ap_weight, estimate, ndcg_weight, prior_pmf
from .estimators import adaptive_mle_em, bv_rank_pmf
from .harness import ExperimentConfig, build_population, repeat_seed, run_experiment
from .mapping import MappingSpec, map_curve
from .sampling import AdaptiveConfig, adaptive_sample, sample_ranks
from .user_sampling import (
    ConfidenceSpec,
    bonferroni,
    moe_sample_size,
    two_model_sample_size,
    user_sampled_metric,
)


def _load_ranks(path, n_items) -> GlobalRankSet:
    if n_items is None:
        # without --N, take the largest observed rank as the catalogue size
        rows = io._read_rows(path, ["user_id", "rank"])
        n_items = max(int(r["rank"]) for r in rows)
    return io.read_global_ranks(path, n_items)


def cmd_sample(args):
    ranks = _load_ranks(args.ranks, args.N)
    if args.adaptive:
        cfg = AdaptiveConfig(args.n0, args.nmax, args.scheme)
        samples = adaptive_sample(ranks, cfg, args.seed)
    else:
        if args.n is None:
            raise SampledEvalError("--n is required unless --adaptive is given")
        samples = sample_ranks(ranks, args.n, args.scheme, args.seed)
    io.write_sampled_ranks(args.out, samples)


def cmd_map(args):
    spec = MappingSpec(args.kind, args.N, args.n, args.a)
    io.write_curve(args.out, map_curve(spec), header=("k", "f_k"))


def _weight_fn(name, C):
    return {"none": None, "ap": ap_weight(C), "ndcg": ndcg_weight(C)}[name]


def cmd_estimate(args):
    samples = io.read_sampled_ranks(args.samples, args.N)
    spec = MetricSpec(args.metric, args.K)
    scheme = SamplingScheme(args.scheme)
    em_cfg = EmConfig(weight_fn=_weight_fn(args.weight, args.C), scheme=scheme)
    mes_cfg = MesConfig(eta=args.eta, scheme=scheme)
    prior = io.read_pmf(args.prior) if args.prior else None
    method = Method(args.method)
    value = estimate(samples, method, spec, prior=prior, gamma=args.gamma,
                     em_cfg=em_cfg, mes_cfg=mes_cfg)
    io._write_rows(args.out, ["method", "metric", "K", "estimate"],
                   [[method.value, spec.kind.value, spec.cutoff, repr(value)]])
    if args.emit_pmf:
        if method is Method.ADAPTIVE_MLE:
            pmf = adaptive_mle_em(samples, args.N, em_cfg)
        elif method is Method.BV:
            pmf = bv_rank_pmf(samples, prior if prior is not None else RankPmf.uniform(args.N),
                              args.gamma, scheme)
        else:
            pmf = prior_pmf(samples, method, em_cfg, mes_cfg)
        io.write_pmf(args.emit_pmf, pmf)


def cmd_usample(args):
    ranks = _load_ranks(args.ranks, args.N)
    value = user_sampled_metric(ranks, args.m, args.seed, MetricSpec(args.metric, args.K))
    print(repr(value))


def cmd_plan(args):
    conf = ConfidenceSpec(args.conf)
    if args.bonferroni:
        conf = ConfidenceSpec.from_alpha(bonferroni(1 - args.conf, args.bonferroni))
    if args.two_models:
        print(two_model_sample_size(args.e, conf))
    else:
        print(moe_sample_size(args.p, args.e, conf))


def cmd_simulate(args):
    cfg = ExperimentConfig.from_json(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    population = build_population(cfg)
    io.write_global_ranks(out / "population.csv", population)
    for i in range(cfg.repeats):
        seed = repeat_seed(cfg.base_seed, i)
        if cfg.adaptive is not None:
            samples = adaptive_sample(population, cfg.adaptive, seed)
        else:
            samples = sample_ranks(population, cfg.sample_size, cfg.scheme, seed)
        io.write_sampled_ranks(out / f"samples_{seed}.csv", samples)


def cmd_compare(args):
    cfg = ExperimentConfig.from_json(args.config)
    report = run_experiment(cfg, workers=args.workers)
    Path(args.report).parent.mkdir(parents=True, exist_ok=True)
    Path(args.report).write_text(report.to_csv(), encoding="utf-8")
    for (est, kind), skip in report.skipped.items():
        if skip:
            print(f"{est}/{kind}: skipped {skip} cutoffs with zero true metric", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sampled-topk", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample items per user and record sampled ranks")
    s.add_argument("--ranks", required=True)
    s.add_argument("--N", type=int, help="catalogue size (default: largest rank in the file)")
    s.add_argument("--n", type=int)
    s.add_argument("--scheme", choices=["with", "without"], default="with")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--adaptive", action="store_true")
    s.add_argument("--n0", type=int, default=100)
    s.add_argument("--nmax", type=int, default=3200)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("map", help="write a sampled-to-global cutoff mapping")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--kind", choices=["baseline", "boundary", "beta", "linear"], required=True)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_map)

    s = sub.add_parser("estimate", help="estimate a global metric from sampled ranks")
    s.add_argument("--samples", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--method", choices=[m.value for m in Method], required=True)
    s.add_argument("--metric", choices=["recall", "ndcg", "ap"], default="recall")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--gamma", type=float, default=0.01)
    s.add_argument("--eta", type=float, default=0.001)
    s.add_argument("--prior")
    s.add_argument("--weight", choices=["none", "ap", "ndcg"], default="none")
    s.add_argument("--C", type=float, default=10.0)
    s.add_argument("--scheme", choices=["with", "without"], default="with")
    s.add_argument("--emit-pmf", dest="emit_pmf")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("usample", help="metric over a random subset of users")
    s.add_argument("--ranks", required=True)
    s.add_argument("--N", type=int)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--metric", choices=["recall", "ndcg", "ap"], default="recall")
    s.add_argument("--K", type=int, required=True)
    s.set_defaults(func=cmd_usample)

    s = sub.add_parser("plan", help="users needed for a margin of error")
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--e", type=float, required=True)
    s.add_argument("--conf", type=float, default=0.95)
    s.add_argument("--two-models", dest="two_models", action="store_true")
    s.add_argument("--bonferroni", type=int)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", help="write a synthetic population and its samples")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", dest="out_dir", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("compare", help="repeated estimator comparison report")
    s.add_argument("--config", required=True)
    s.add_argument("--report", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (SampledEvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
