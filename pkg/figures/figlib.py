"""Shared CSV loading for the figure scripts.

The scripts are read-only consumers of the study CSV files; everything
numerical was computed upstream, only axis transforms happen here.
"""

import csv


class FigureDataError(ValueError):
    """Input CSV cannot produce the requested figure."""


def load_rows(path, required):
    """Rows of a CSV file as dicts, checking the required columns exist."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise FigureDataError(
                f"{path}: missing column(s) {', '.join(missing)}; "
                f"found {', '.join(header)}")
        rows = list(reader)
    if not rows:
        raise FigureDataError(f"{path}: no data rows")
    return rows


def save_both(fig, output):
    """Write SVG and PNG next to each other; output may carry either suffix."""
    stem = output
    for suffix in (".svg", ".png"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    paths = [stem + ".svg", stem + ".png"]
    for p in paths:
        fig.savefig(p, bbox_inches="tight")
    return paths
