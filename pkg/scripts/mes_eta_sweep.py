"""MES error as a function of the entropy weight eta."""
import argparse
import warnings

from sampled_topk.harness import ExperimentConfig, build_population, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--etas", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    args = ap.parse_args()

    base = dict(n_items=2000, n_users=25_000, beta_a=0.5, scheme="with", sample_size=100,
                repeats=args.repeats, k_max=50, estimators=["MES", "MN_MES"])
    pop = build_population(ExperimentConfig(**base))
    print("eta,MES_pct,MN_MES_pct")
    for eta in args.etas:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = run_experiment(ExperimentConfig(**base, eta=eta), pop)
        print(f"{eta:g},{rep.lookup('MES')['mean_rel_err_pct']:.3f},"
              f"{rep.lookup('MN_MES')['mean_rel_err_pct']:.3f}")


if __name__ == "__main__":
    main()
