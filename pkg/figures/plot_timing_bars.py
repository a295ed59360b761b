#!/usr/bin/env python3
"""Bar chart of mean training time per benchmark cell with error bars.

Bars are grouped by quantile level with one bar per method; the error
bars show mean ± 1.96 * stderr, labeled as such.

Usage: plot_timing_bars.py BENCH_AGGREGATE_JSON --out figure.png
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from figio import SchemaError, load_bench_aggregate


def render(input_path: str, out_path: str) -> dict:
    doc = load_bench_aggregate(input_path)
    cells = doc["cells"]
    methods = list(dict.fromkeys(c["method"] for c in cells))
    taus = sorted({c["tau"] for c in cells})

    width = 0.8 / len(methods)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for k, method in enumerate(methods):
        means, errors, positions = [], [], []
        for i, tau in enumerate(taus):
            match = [c for c in cells if c["method"] == method and c["tau"] == tau]
            if not match:
                continue
            ts = match[0]["aggregates"]["train_seconds"]
            means.append(ts["mean"])
            errors.append(1.96 * ts["stderr"])
            positions.append(i + k * width)
        ax.bar(positions, means, width=width, yerr=errors, capsize=3, label=method)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(taus))])
    ax.set_xticklabels([f"tau={t:g}" for t in taus])
    ax.set_ylabel("mean training seconds (±1.96·stderr)")
    ax.set_title("Training time by method")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"out": out_path, "methods": methods, "taus": taus}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input", help="bench aggregate JSON artifact")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        meta = render(args.input, args.out)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {meta['out']} ({len(meta['methods'])} methods, "
          f"{len(meta['taus'])} quantile levels)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
