"""Sample plot of sweep and trace CSVs (needs matplotlib, which the package does not depend on).

    python scripts/plot_example.py results/sweeps/sweep_nk.csv results/convergence/trace_seed7.csv
"""

import csv
import sys

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # pragma: no cover
    sys.exit("matplotlib is not installed; the CSVs are plain text and plot with any tool")


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_sweep(path):
    rows = [r for r in read(path) if r["seed"] == "mean"]
    fig, ax = plt.subplots(figsize=(4, 3))
    for m in sorted({r["method"] for r in rows}):
        pts = [(float(r["value"]), float(r["P_watts"])) for r in rows if r["method"] == m and r["P_watts"]]
        ax.plot(*zip(*pts), marker="o", label=m.upper())
    ax.set_xlabel(rows[0]["param"])
    ax.set_ylabel("UAV power (W)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path.replace(".csv", ".png"), dpi=150)


def plot_trace(path):
    rows = read(path)
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.plot([int(r["iter"]) for r in rows], [float(r["P_watts"]) for r in rows], marker=".")
    ax.set_xlabel("iteration")
    ax.set_ylabel("UAV power (W)")
    fig.tight_layout()
    fig.savefig(path.replace(".csv", ".png"), dpi=150)


if __name__ == "__main__":
    for p in sys.argv[1:]:
        (plot_trace if "iter" in read(p)[0] else plot_sweep)(p)
        print("wrote", p.replace(".csv", ".png"))
