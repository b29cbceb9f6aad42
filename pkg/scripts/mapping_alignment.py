"""Mean |sampled Recall@k - global Recall@f(k)| for each mapping function."""
import argparse

from sampled_topk.harness import draw_population, synth_rank_pmf
from sampled_topk.mapping import MappingSpec, align_error, fit_beta_a
from sampled_topk.metrics import empirical_pmf
from sampled_topk.sampling import sample_ranks


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=2000)
    ap.add_argument("--M", type=int, default=25_000)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--a", type=float, default=0.5, help="population shape")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    pop = draw_population(synth_rank_pmf(args.a, args.N), args.M, args.seed)
    samples = sample_ranks(pop, args.n, "with", args.seed + 1)
    fitted = fit_beta_a(empirical_pmf(pop))
    print(f"fitted a = {fitted}")
    print("mapping,a,mean_abs_error")
    for kind, a in [("baseline", 1.0), ("boundary", 1.0), ("linear", 1.0),
                    ("beta", 0.5), ("beta", fitted)]:
        _, mean = align_error(pop, samples, MappingSpec(kind, args.N, args.n, a))
        print(f"{kind},{a},{mean:.6f}")


if __name__ == "__main__":
    main()
