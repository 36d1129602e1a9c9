"""Averaged sweeps over local iterations, payload size and bandwidth.

    python scripts/sweeps.py --seeds 20 --outdir results/sweeps
    UAVSFL_THREADS=4 python scripts/sweeps.py --only nk
"""

import argparse
from pathlib import Path

from uavsfl import harness
from uavsfl.baselines import Method
from uavsfl.scenario import default_config, load_config

GRIDS = {
    "nk": (2, 4, 6, 8),
    "payload": (50e3, 100e3, 150e3, 200e3),
    "bandwidth": (10e6, 15e6, 20e6, 25e6, 30e6),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--methods", default="sfl", help="comma list from sfl,ff,ft,fup")
    ap.add_argument("--only", choices=sorted(GRIDS), nargs="*", default=sorted(GRIDS))
    ap.add_argument("--outdir", default="results/sweeps")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else default_config()
    methods = tuple(Method.parse(args.methods))
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for param in args.only:
        spec = harness.SweepSpec(param, tuple(float(v) for v in GRIDS[param]), args.seeds, methods, cfg)
        _, agg = harness.cmd_sweep(spec, out / f"sweep_{param}.csv")
        for a in agg:
            print(f"{param}={a.value:g} {a.method}: P={a.P_watts:.5g} W  t_cm={a.t_cm_mean_s:.4g} s  "
                  f"t_cp={a.t_cp_mean_s:.4g} s  ({a.status})")


if __name__ == "__main__":
    main()
