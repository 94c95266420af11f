#!/usr/bin/env python3
"""Log-log convergence plot from a study CSV.

One series per (p, nu) combination plus any conforming rows, with a
dashed reference-slope guide anchored at the last data point of the
longest series.  Writes both SVG and PNG.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from figlib import FigureDataError, load_rows, save_both  # noqa: E402

REQUIRED = ["method", "n", "p", "nu"]


def build_series(rows, x, y):
    """Map series label -> sorted (abscissa, value) pairs.

    Mesh sweeps get one series per (p, nu); degree sweeps vary p along
    the axis, so they get one series per nu.
    """
    series = {}
    for r in rows:
        if r["method"] == "conforming":
            label = ("conforming" if x == "p"
                     else f"conforming p={r['p']}")
        elif x == "p":
            label = f"nu={float(r['nu']):g}"
        else:
            label = f"p={r['p']}, nu={float(r['nu']):g}"
        xv = 1.0 / int(r["n"]) if x == "h" else float(r["p"])
        yv = float(r[y])
        if yv <= 0:
            raise FigureDataError(
                f"non-positive {y} value {yv} in series {label}")
        series.setdefault(label, []).append((xv, yv))
    for label, pts in series.items():
        if len(pts) < 2:
            raise FigureDataError(
                f"series {label} has {len(pts)} data row(s); need at least 2")
        pts.sort()
    return series


def make_figure(rows, x, y, slope):
    series = build_series(rows, x, y)
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    for label, pts in sorted(series.items()):
        xs, ys = zip(*pts)
        ax.loglog(xs, ys, "o-", label=label)

    anchor = max(series.values(), key=len)
    x0, y0 = anchor[-1]
    gx = [min(p[0] for s in series.values() for p in s),
          max(p[0] for s in series.values() for p in s)]
    ax.loglog(gx, [y0 * (g / x0) ** slope for g in gx], "k--",
              label=f"slope {slope:g}")
    ax.set_xlabel("h = 1/n" if x == "h" else "p")
    ax.set_ylabel(y)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="study CSV file")
    parser.add_argument("--output", required=True,
                        help="output image path (suffix optional)")
    parser.add_argument("--x", choices=("h", "p"), default="h",
                        help="abscissa: mesh width or degree")
    parser.add_argument("--y", default="err_h12",
                        help="record column to plot")
    parser.add_argument("--slope", type=float, default=None,
                        help="reference guide slope (default 0.5 for h, "
                             "-1 for p)")
    args = parser.parse_args(argv)
    slope = args.slope if args.slope is not None else \
        (0.5 if args.x == "h" else -1.0)

    rows = load_rows(args.input, REQUIRED + [args.y])
    fig = make_figure(rows, args.x, args.y, slope)
    for p in save_both(fig, args.output):
        print(f"wrote {p}")
    plt.close(fig)


if __name__ == "__main__":
    try:
        main()
    except FigureDataError as exc:
        sys.exit(str(exc))
