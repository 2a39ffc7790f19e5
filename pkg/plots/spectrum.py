#!/usr/bin/env python3
"""Render iteration-spectrum CSVs: one panel per spatial grid, a scatter of
eigenvalues per angular resolution, with the 0.2247 reference line.

Usage: python plots/spectrum.py spectrum.csv out.png
"""

import sys
from pathlib import Path

import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _common import REFERENCE_BOUND, read_rows, save


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        sys.exit("usage: spectrum.py <spectrum.csv> <out.png>")
    csv_path, out_path = argv
    rows = read_rows(csv_path, ["J", "N", "index", "value"])

    panels = {}
    for row in rows:
        j, n = int(row["J"]), int(row["N"])
        panels.setdefault(j, {}).setdefault(n, []).append(
            (int(row["index"]), float(row["value"])))

    js = sorted(panels)
    fig, axes = plt.subplots(1, len(js), figsize=(4.0 * len(js), 3.4),
                             sharey=True, squeeze=False)
    for ax, j in zip(axes[0], js):
        for n in sorted(panels[j]):
            pts = sorted(panels[j][n])
            ax.plot([p[0] for p in pts], [p[1] for p in pts], ".",
                    markersize=3, label=f"N={n}")
        ax.axhline(REFERENCE_BOUND, color="k", linestyle="--", linewidth=0.8,
                   label=f"{REFERENCE_BOUND}")
        ax.set_ylim(0.0, 0.25)
        ax.set_title(f"J = {j}")
        ax.set_xlabel("eigenvalue index")
    axes[0][0].set_ylabel("eigenvalue")
    axes[0][-1].legend(fontsize=6, loc="center right")
    fig.tight_layout()
    save(fig, out_path)


if __name__ == "__main__":
    main()
