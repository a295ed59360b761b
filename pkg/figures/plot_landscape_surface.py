#!/usr/bin/env python3
"""Heatmap plus 3D surface of a loss-landscape CSV grid.

``inf`` sentinel cells (diverged loss evaluations) are masked out of the
heatmap and dropped from the 3D surface rather than crashing the plot.

Usage: plot_landscape_surface.py LANDSCAPE_CSV --out figure.png
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from figio import SchemaError, load_surface


def render(input_path: str, out_path: str) -> dict:
    alphas, betas, grid = load_surface(input_path)
    masked_cells = int(grid.mask.sum()) if np.ma.is_masked(grid) else 0

    fig = plt.figure(figsize=(11, 4.5))
    ax_flat = fig.add_subplot(1, 2, 1)
    mesh = ax_flat.pcolormesh(betas, alphas, grid, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax_flat, label="loss")
    ax_flat.set_xlabel("beta")
    ax_flat.set_ylabel("alpha")
    ax_flat.set_title("loss heatmap")

    ax_3d = fig.add_subplot(1, 2, 2, projection="3d")
    B, A = np.meshgrid(betas, alphas)
    Z = np.ma.filled(grid, np.nan)
    ax_3d.plot_surface(A, B, Z, cmap="viridis", linewidth=0, antialiased=True)
    ax_3d.set_xlabel("alpha")
    ax_3d.set_ylabel("beta")
    ax_3d.set_zlabel("loss")
    ax_3d.set_title("loss surface")

    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"out": out_path, "shape": grid.shape, "masked_cells": masked_cells}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input", help="landscape CSV artifact")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        meta = render(args.input, args.out)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {meta['out']} (grid {meta['shape'][0]}x{meta['shape'][1]}, "
          f"{meta['masked_cells']} masked cells)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
