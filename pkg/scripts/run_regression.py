#!/usr/bin/env python3
"""Gaussian-input regression benchmark: GP (MLE / CV) vs kernel smoothing."""

import argparse

from otgp.experiments import RegressionConfig, run_gaussian_regression


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--seeds", type=int, default=5, help="number of seeds averaged")
    ap.add_argument("--grid-path", action="store_true",
                    help="embed through the grid pipeline instead of closed forms")
    ap.add_argument("--out", default="out/regression")
    args = ap.parse_args()

    cfg = RegressionConfig(seed=args.seed, n_seeds=args.seeds,
                           grid_path=args.grid_path, out_dir=args.out)
    report = run_gaussian_regression(cfg)
    names = {"smoothing": "Kernel Smoothing", "gp_mle": "Gaussian Process",
             "gp_cv": "Gaussian Process CV"}
    print(f"{'method':<22}{'RMSE':>8}{'Q2':>8}{'CIC':>8}")
    for key in ("smoothing", "gp_mle", "gp_cv"):
        row = report["summary"][key]
        cic = "NA" if row["cic"] == "NA" else f"{row['cic']:.2f}"
        print(f"{names[key]:<22}{row['rmse']:>8.3f}{row['q2']:>8.3f}{cic:>8}")


if __name__ == "__main__":
    main()
