#!/usr/bin/env python3
"""Empirical-vs-population kernel consistency sweep (Gaussian populations)."""

import argparse

from otgp.experiments import ConsistencyConfig, run_consistency


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--out", default="out/consistency")
    args = ap.parse_args()

    report = run_consistency(ConsistencyConfig(seed=args.seed, d=args.d, out_dir=args.out))
    print("n        mean ||M_n - M||_F")
    for n, err in report["pooled_mean_error"].items():
        print(f"{n:>6}   {err:.5f}")
    print(f"first/last ratio: {report['error_ratio_first_to_last']:.2f}")
    print(f"log-log slope:    {report['loglog_slope']:.3f}")


if __name__ == "__main__":
    main()
