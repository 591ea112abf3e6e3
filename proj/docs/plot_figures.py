#!/usr/bin/env python3
"""Plot the CSV outputs produced by the grazesim CLI presets in configs/.

Usage:
    python3 docs/plot_figures.py <output-dir> [--save <dir>]

<output-dir> is the --out directory used when running the CLI. Every figure
whose files are present is plotted; missing ones are skipped. With --save the
plots are written as PNG files instead of shown interactively.
"""

import argparse
import os
import sys

import matplotlib

import numpy as np


def load_csv(path):
    """Load a grazesim CSV (comment lines start with '#', first row is a header)."""
    with open(path) as f:
        rows = [line.strip() for line in f if line.strip() and not line.startswith("#")]
    header = rows[0].split(",")
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    return header, data


def col(header, data, name):
    return data[:, header.index(name)]


def plot_bifurcation(ax, outdir, prefix):
    h, d = load_csv(os.path.join(outdir, f"{prefix}_scatter.csv"))
    ax.plot(col(h, d, "mu"), col(h, d, "x"), ",", color="0.4", rasterized=True)
    hb, db = load_csv(os.path.join(outdir, f"{prefix}_branches.csv"))
    stable = col(hb, db, "stable") > 0.5
    ax.plot(col(hb, db, "mu")[stable], col(hb, db, "x_star")[stable], "k.", ms=2)
    ax.plot(col(hb, db, "mu")[~stable], col(hb, db, "x_star")[~stable], "r.", ms=1)
    ax.set_xlabel(r"$\mu$")
    ax.set_ylabel("x")
    ax.set_title(f"{prefix}: noisy iterates over deterministic branches")


def plot_histogram(ax, outdir, prefix):
    h, d = load_csv(os.path.join(outdir, f"{prefix}_histogram.csv"))
    x, y, p = col(h, d, "x"), col(h, d, "y"), col(h, d, "probability")
    sc = ax.scatter(x, y, c=np.log10(p), s=1, cmap="viridis", rasterized=True)
    ax.figure.colorbar(sc, ax=ax, label="log10 probability")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"{prefix}: invariant density (occupied bins)")


def plot_fraction(ax, outdir, prefix):
    h, d = load_csv(os.path.join(outdir, f"{prefix}_fraction.csv"))
    ax.plot(col(h, d, "eps"), col(h, d, "fraction"), "ko-")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("period-n return fraction")
    ax.set_title(f"{prefix}: fraction of maximal-period returns vs noise")


def plot_stddev(ax, outdir, prefix):
    h, d = load_csv(os.path.join(outdir, f"{prefix}_stddev.csv"))
    eps = col(h, d, "eps")
    ax.loglog(eps, col(h, d, "std_x"), "ko-", label="std(x)")
    ax.loglog(eps, col(h, d, "std_y"), "rs-", label="std(y)")
    ax.loglog(eps, col(h, d, "std_x")[0] * np.sqrt(eps / eps[0]), "k--",
              lw=0.8, label=r"$\propto\sqrt{\varepsilon}$")
    ax.legend()
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("marginal standard deviation")
    ax.set_title(f"{prefix}: noise scaling at grazing")


def plot_compare(fig, outdir, prefix):
    hs, ds = load_csv(os.path.join(outdir, f"{prefix}_sde_sections.csv"))
    hm, dm = load_csv(os.path.join(outdir, f"{prefix}_map_sections.csv"))
    dfs = np.unique(col(hs, ds, "d_f"))
    axes = fig.subplots(1, len(dfs), squeeze=False)[0]
    for ax, df in zip(axes, dfs):
        u_sde = col(hs, ds, "u1")[col(hs, ds, "d_f") == df]
        u_map = col(hm, dm, "u1")[col(hm, dm, "d_f") == df]
        bins = np.histogram_bin_edges(np.concatenate([u_sde, u_map]), bins=60)
        ax.hist(u_sde, bins=bins, density=True, alpha=0.5, label="SDE sections")
        ax.hist(u_map, bins=bins, density=True, alpha=0.5, label="map sections")
        ax.set_xlabel("section displacement $u_1$")
        ax.set_title(f"dF = {df:g}")
        ax.legend()
    fig.suptitle(f"{prefix}: oscillator SDE vs normal-form map")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("outdir", help="directory holding the CLI output CSVs")
    ap.add_argument("--save", metavar="DIR", help="save PNGs here instead of showing")
    args = ap.parse_args()
    if args.save:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    jobs = [
        ("fig2", plot_bifurcation, "fig2_scatter.csv"),
        ("fig3", plot_bifurcation, "fig3_scatter.csv"),
        ("fig6", plot_fraction, "fig6_fraction.csv"),
        ("fig7", plot_histogram, "fig7_histogram.csv"),
        ("fig8", plot_stddev, "fig8_stddev.csv"),
        ("fig9", plot_histogram, "fig9_histogram.csv"),
    ]
    made = []
    for prefix, fn, probe in jobs:
        if not os.path.exists(os.path.join(args.outdir, probe)):
            continue
        fig, ax = plt.subplots(figsize=(7, 5))
        fn(ax, args.outdir, prefix)
        made.append((prefix, fig))
    if os.path.exists(os.path.join(args.outdir, "fig5_sde_sections.csv")):
        fig = plt.figure(figsize=(10, 5))
        plot_compare(fig, args.outdir, "fig5")
        made.append(("fig5", fig))

    if not made:
        sys.exit(f"no known CSV outputs found in {args.outdir}")
    if args.save:
        os.makedirs(args.save, exist_ok=True)
        for prefix, fig in made:
            path = os.path.join(args.save, f"{prefix}.png")
            fig.savefig(path, dpi=150, bbox_inches="tight")
            print(f"wrote {path}")
    else:
        import matplotlib.pyplot as plt
        plt.show()


if __name__ == "__main__":
    main()
