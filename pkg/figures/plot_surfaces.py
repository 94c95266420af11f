#!/usr/bin/env python3
"""Four-panel surface plot of the penalty sweep solution fields.

Reads the nu-sweep field samples CSV, draws one 3D surface per penalty
value plus the conforming solution in a 2x2 grid.  Each mesh panel is
drawn separately so the inter-element discontinuities stay visible, and
all panels share one color scale.  Writes both SVG and PNG.
"""

import argparse
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from figlib import FigureDataError, load_rows, save_both  # noqa: E402

REQUIRED = ["method", "nu", "panel", "x1", "x2", "u"]


def group_fields(rows):
    """Map (method, nu) -> panel -> list of (x1, x2, u) samples."""
    fields = defaultdict(lambda: defaultdict(list))
    for r in rows:
        key = (r["method"], float(r["nu"]))
        fields[key][int(r["panel"])].append(
            (float(r["x1"]), float(r["x2"]), float(r["u"])))
    return fields


def panel_order(fields):
    """DG entries by increasing nu, conforming last."""
    dg = sorted(k for k in fields if k[0] == "dg")
    conf = [k for k in fields if k[0] == "conforming"]
    return dg + conf


def make_figure(rows, max_panels=4):
    fields = group_fields(rows)
    keys = panel_order(fields)[:max_panels]
    if not keys:
        raise FigureDataError("no (method, nu) groups in the input")
    lo = min(float(r["u"]) for r in rows)
    hi = max(float(r["u"]) for r in rows)
    if lo == hi:
        hi = lo + 1.0

    ncols = 2
    nrows = (len(keys) + 1) // 2
    fig = plt.figure(figsize=(4.6 * ncols, 3.8 * nrows))
    for i, key in enumerate(keys):
        ax = fig.add_subplot(nrows, ncols, i + 1, projection="3d")
        for pts in fields[key].values():
            arr = np.array(sorted(pts))
            m = int(round(np.sqrt(len(arr))))
            if m * m != len(arr):
                raise FigureDataError(
                    f"panel sample count {len(arr)} is not a square grid")
            X = arr[:, 0].reshape(m, m)
            Y = arr[:, 1].reshape(m, m)
            U = arr[:, 2].reshape(m, m)
            ax.plot_surface(X, Y, U, cmap="viridis", vmin=lo, vmax=hi,
                            linewidth=0, antialiased=False)
        method, nu = key
        ax.set_title("conforming" if method == "conforming"
                     else f"nu = {nu:g}")
        ax.set_zlim(lo, hi)
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True,
                        help="field-sample CSV from the nu-sweep command")
    parser.add_argument("--output", required=True,
                        help="output image path (suffix optional)")
    args = parser.parse_args(argv)

    rows = load_rows(args.input, REQUIRED)
    fig = make_figure(rows)
    for p in save_both(fig, args.output):
        print(f"wrote {p}")
    plt.close(fig)


if __name__ == "__main__":
    try:
        main()
    except FigureDataError as exc:
        sys.exit(str(exc))
