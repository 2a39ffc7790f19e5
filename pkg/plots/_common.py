"""Shared CSV loading and validation for the plot scripts.

The scripts are pure CSV-to-image transforms: they never recompute any
numerics, and they refuse to write anything when the input does not match
the documented column schema.
"""

import csv
import sys

import matplotlib

matplotlib.use("Agg")

REFERENCE_BOUND = 0.2247  # literature bound for the corrected iteration spectrum


def read_rows(path: str, columns: list[str]) -> list[dict]:
    """Read a CSV with exactly the given header; exit with a diagnostic otherwise."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                sys.exit(f"{path}: empty file, expected columns {columns}")
            if header != columns:
                sys.exit(f"{path}: expected columns {columns}, found {header}")
            rows = [dict(zip(columns, row)) for row in reader if row]
    except OSError as err:
        sys.exit(f"{path}: {err}")
    if not rows:
        sys.exit(f"{path}: no data rows")
    return rows


def save(fig, out_path: str):
    fig.savefig(out_path, dpi=150)
