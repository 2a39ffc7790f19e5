#!/usr/bin/env python3
"""Render a solved scalar-flux profile from a solution CSV.

Usage: python plots/flux.py solution.csv out.png
"""

import sys
from pathlib import Path

import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _common import read_rows, save


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        sys.exit("usage: flux.py <solution.csv> <out.png>")
    csv_path, out_path = argv
    rows = read_rows(csv_path, ["z", "scalar_flux"])
    z = [float(r["z"]) for r in rows]
    flux = [float(r["scalar_flux"]) for r in rows]

    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    ax.plot(z, flux, "-")
    ax.set_xlabel("z")
    ax.set_ylabel("scalar flux")
    ax.grid(True, linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    save(fig, out_path)


if __name__ == "__main__":
    main()
