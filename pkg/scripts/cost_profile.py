"""Per-size sampling cost C_j of an adaptive run on a synthetic population."""
import argparse

from sampled_topk.harness import draw_population, synth_rank_pmf
from sampled_topk.sampling import AdaptiveConfig, adaptive_sample, cost_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=2000)
    ap.add_argument("--M", type=int, default=25_000)
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--n0", type=int, default=100)
    ap.add_argument("--nmax", type=int, default=3200)
    ap.add_argument("--scheme", choices=["with", "without"], default="with")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    pop = draw_population(synth_rank_pmf(args.a, args.N), args.M, args.seed)
    cfg = AdaptiveConfig(args.n0, args.nmax, args.scheme)
    prof = cost_profile(adaptive_sample(pop, cfg, args.seed + 1), cfg)
    print("size,users,cost")
    for size, m, c in zip(prof.sizes, prof.user_counts, prof.costs):
        print(f"{size},{m},{c:.1f}")


if __name__ == "__main__":
    main()
