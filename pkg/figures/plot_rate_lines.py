#!/usr/bin/env python3
"""Log-log error-vs-sample-size plot with the fitted line and slope label.

Points come straight from the rate artifact; the dashed line uses the
artifact's fitted slope and intercept, annotated as "slope = <value>".

Usage: plot_rate_lines.py RATE_JSON --out figure.png
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from figio import SchemaError, load_rate


def render(input_path: str, out_path: str) -> dict:
    doc = load_rate(input_path)
    ns = np.array([p["n"] for p in doc["points"]], dtype=float)
    mses = np.array([p["mse_mean"] for p in doc["points"]], dtype=float)
    slope = doc["fit"]["slope"]
    intercept = doc["fit"]["intercept"]
    annotation = f"slope = {slope:.2f}"

    log_n, log_mse = np.log(ns), np.log(mses)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(log_n, log_mse, "o-", label="measured")
    ax.plot(log_n, intercept + slope * log_n, "--", label="linear fit")
    ax.annotate(annotation, xy=(log_n[-1], intercept + slope * log_n[-1]),
                xytext=(-80, 15), textcoords="offset points")
    ax.set_xlabel("log sample size")
    ax.set_ylabel("log MSE")
    ax.set_title(f"Error rate (R² = {doc['fit']['r_squared']:.3f})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"out": out_path, "annotation": annotation, "n_points": ns.size}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input", help="rate JSON artifact")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        meta = render(args.input, args.out)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {meta['out']} ({meta['annotation']})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
