"""Two keyword-separable tasks trained jointly until train macro-F1 reaches 1.0."""

import argparse

from mtlforge.experiments import OverfitSettings, run_overfit


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0])
    parser.add_argument("--max-epochs", type=int, default=200)
    args = parser.parse_args()
    settings = OverfitSettings(max_epochs=args.max_epochs)
    print("| seed | epochs | aggregate F1 | seconds |")
    print("|---:|---:|---:|---:|")
    for seed in args.seeds:
        r = run_overfit(seed, settings)
        print(f"| {seed} | {r.epochs_run} | {r.best_aggregate:.4f} | {r.seconds:.1f} |")


if __name__ == "__main__":
    main()
