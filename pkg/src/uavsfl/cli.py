"""Command-line entry point ``uavsfl``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .baselines import Method
from .optimizer import InfeasibleStart, RunOptions
from .scenario import ConfigError, GenerationConfig, generate_scenario, load_config, precheck_feasibility

EXIT_CONFIG = 2


def _values(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty value list")
    return vals


def _methods(text: str) -> tuple[Method, ...]:
    try:
        ms = tuple(Method.parse(text))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if not ms:
        raise argparse.ArgumentTypeError("empty method list")
    return ms


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavsfl", description="UAV power minimisation for wirelessly powered split FL")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="optimise one scenario and write its convergence trace")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", required=True)
    p.add_argument("--uncapped", action="store_true", help="let the UAV power exceed its cap")

    p = sub.add_parser("sweep", help="sweep one parameter over matched seeds")
    p.add_argument("--param", required=True, choices=sorted(harness.SWEEP_PARAMS))
    p.add_argument("--values", required=True, type=_values, help="SI units: bits for payload, Hz for bandwidth")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--methods", type=_methods, default=(Method.SFL,))
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--capped", action="store_true", help="enforce the UAV power cap")

    p = sub.add_parser("compare", help="SFL against the FF, FT and FUP baselines")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--methods", type=_methods, default=tuple(Method))
    p.add_argument("--out", required=True)
    p.add_argument("--capped", action="store_true", help="enforce the UAV power cap")

    p = sub.add_parser("check", help="feasibility pre-check of a config")
    p.add_argument("--config", required=True)
    return ap


def _load(path: str) -> GenerationConfig:
    try:
        return load_config(path)
    except OSError as e:
        raise ConfigError("<file>", f"cannot read {path}: {e.strerror}") from None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args.config)
        if args.cmd == "run":
            trace = harness.cmd_run(cfg, args.out, args.seed, RunOptions(enforce_uav_cap=not args.uncapped))
            print(f"{trace.status}: P = {trace.powers[-1]:.6g} W after {trace.iterations} iterations")
            return 0 if trace.status in ("converged", "max_iters") else 1
        if args.cmd == "sweep":
            spec = harness.SweepSpec(args.param, args.values, args.seeds, args.methods, cfg, args.capped)
            _, agg = harness.cmd_sweep(spec, args.out)
            for a in agg:
                print(f"{a.param}={a.value:g} {a.method}: mean P = {a.P_watts:.6g} W ({a.status})")
            return 0
        if args.cmd == "compare":
            _, summary = harness.cmd_compare(cfg, args.seeds, args.out, args.methods, enforce_uav_cap=args.capped)
            print(summary.text())
            return 0
        if args.cmd == "check":
            report = precheck_feasibility(generate_scenario(cfg))
            print(report.summary())
            return 0 if report.passed else 1
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleStart as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return 1


if __name__ == "__main__":
    sys.exit(main())
