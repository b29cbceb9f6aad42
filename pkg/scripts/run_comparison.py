"""Estimator comparison table on a synthetic Beta(a, 1) population."""
import argparse
import sys
import warnings

from sampled_topk.harness import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/comparison.json")
    ap.add_argument("--repeats", type=int, help="override the config's repeat count")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", help="write the CSV report here as well as stdout")
    args = ap.parse_args()

    cfg = ExperimentConfig.from_json(args.config)
    if args.repeats:
        cfg.repeats = args.repeats
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = run_experiment(cfg, workers=args.workers)
    text = report.to_csv()
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
