"""Convergence traces of the UAV power for a few seeds of the default scenario.

    python scripts/convergence.py --seeds 7 8 9 --outdir results/convergence
"""

import argparse
from pathlib import Path

from uavsfl import harness
from uavsfl.scenario import default_config, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None, help="JSON config; defaults to the built-in scenario")
    ap.add_argument("--seeds", type=int, nargs="+", default=[7])
    ap.add_argument("--outdir", default="results/convergence")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else default_config()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for seed in args.seeds:
        trace = harness.cmd_run(cfg, out / f"trace_seed{seed}.csv", seed=seed)
        P = trace.powers
        print(f"seed {seed}: {trace.status} in {trace.iterations} iterations, P {P[0]:.4f} -> {P[-1]:.4f} W")


if __name__ == "__main__":
    main()
