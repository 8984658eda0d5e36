#!/usr/bin/env python3
"""Spectrum diagnostic: naive exp(-W2^2) Gram vs the embedding-kernel Gram."""

import argparse

from otgp.experiments import PsdConfig, run_psd_diagnostic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--out", default="out/psd")
    args = ap.parse_args()

    report = run_psd_diagnostic(PsdConfig(seed=args.seed, n_points=args.n, out_dir=args.out))
    for seed, row in report["per_seed"].items():
        print(f"seed {seed}: naive negatives={row['naive_negatives']} "
              f"(min eig {row['naive_min_eig']:.2e}), "
              f"embedding negatives={row['embed_negatives']}")
    print(f"naive indefinite on every seed: {report['all_naive_indefinite']}")
    print(f"embedding Gram PSD on every seed: {report['all_embed_psd']}")
    print(f"1-D naive Gram PSD on every seed: {report['all_naive_1d_psd']}")


if __name__ == "__main__":
    main()
