#!/usr/bin/env python3
"""Overlay the check loss and its smoothed versions from a loss-curve CSV.

The check loss is drawn solid, each smoothed curve dashed, one line per
bandwidth column found in the artifact.

Usage: plot_loss_comparison.py CURVES_CSV --out figure.png
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from figio import SchemaError, load_loss_curves, smoothing_levels


def render(input_path: str, out_path: str) -> dict:
    columns = load_loss_curves(input_path)
    levels = sorted(smoothing_levels(columns), reverse=True)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(columns["u"], columns["pinball"], "k-", linewidth=2, label="check loss")
    for h in levels:
        ax.plot(columns["u"], columns[f"smoothed_h{h:g}"], "--", linewidth=1.5,
                label=f"smoothed, h={h:g}")
    ax.set_xlabel("residual u")
    ax.set_ylabel("loss")
    ax.legend()
    ax.set_title("Check loss vs kernel-smoothed loss")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"out": out_path, "bandwidths": levels, "n_points": columns["u"].size}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input", help="loss-curve CSV artifact")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        meta = render(args.input, args.out)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {meta['out']} ({len(meta['bandwidths'])} smoothed curves)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
