#!/usr/bin/env python3
"""Render convergence-sweep CSVs as a log-log error plot with slope guides.

Usage: python plots/convergence.py convergence.csv out.png
"""

import sys
from pathlib import Path

import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _common import read_rows, save


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        sys.exit("usage: convergence.py <convergence.csv> <out.png>")
    csv_path, out_path = argv
    rows = read_rows(csv_path, ["level", "E_h", "rate"])
    levels = [int(r["level"]) for r in rows]
    errors = [float(r["E_h"]) for r in rows]

    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    ax.loglog(levels, errors, "o-", label="measured")
    anchor = errors[0]
    for slope, style in ((1, ":"), (2, "--")):
        guide = [anchor * (levels[0] / lv) ** slope for lv in levels]
        ax.loglog(levels, guide, "k" + style, linewidth=0.8, label=f"slope {slope}")
    ax.set_xlabel("resolution")
    ax.set_ylabel("L2 error")
    ax.legend(fontsize=7)
    ax.grid(True, which="both", linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    save(fig, out_path)


if __name__ == "__main__":
    main()
