"""SFL against the fixed-frequency, fixed-time and fixed-placement schemes on matched seeds.

    python scripts/compare.py --seeds 20 --out results/compare.csv
"""

import argparse
from pathlib import Path

from uavsfl import harness
from uavsfl.scenario import default_config, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--out", default="results/compare.csv")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else default_config()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    _, summary = harness.cmd_compare(cfg, args.seeds, args.out)
    print(summary.text())


if __name__ == "__main__":
    main()
