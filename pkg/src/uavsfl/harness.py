"""Experiment drivers: single traced runs, parameter sweeps and baseline comparisons.

Data CSVs are byte-deterministic for a fixed invocation. Wall-clock figures and
timestamps go to a ``<out>.meta.json`` sidecar instead, except for the run trace
whose ``wall_ms`` column is part of its fixed header.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import baselines, optimizer, physics
from .baselines import Method
from .optimizer import InfeasibleStart, RunOptions
from .scenario import GenerationConfig, generate_scenario

log = logging.getLogger(__name__)

TRACE_HEADER = ["iter", "P_watts", "max_residual", "subproblem_status", "wall_ms"]
SWEEP_HEADER = ["param", "value", "seed", "method", "P_watts", "t_cm_mean_s", "t_cp_mean_s",
                "iterations", "status"]
COMPARE_HEADER = ["seed", "method", "P_watts", "reduction_pct", "t_cm_mean_s", "t_cp_mean_s",
                  "iterations", "status"]

# CLI name -> (where the field lives, field name)
SWEEP_PARAMS = {
    "nk": ("gen", "local_iters"),
    "payload": ("system", "payload_bits"),
    "bandwidth": ("system", "bandwidth_hz"),
}


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "" if not np.isfinite(x) else f"{float(x):.12g}"
    return str(x)


def pool_width() -> int:
    raw = os.environ.get("UAVSFL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"UAVSFL_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_meta(out: str | Path, payload: dict) -> Path:
    meta = {
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "python": platform.python_version(),
        "numpy": np.__version__,
        **payload,
    }
    path = Path(str(out) + ".meta.json")
    path.write_text(json.dumps(meta, indent=2, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------------------
# single run

def cmd_run(cfg: GenerationConfig, out: str | Path, seed: int | None = None,
            options: RunOptions | None = None) -> optimizer.RunTrace:
    """Trace one optimisation; ``seed`` overrides the config's seed when given."""
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    s = generate_scenario(cfg)
    alloc, trace = optimizer.run(s, options)
    rows = [[r.iter, r.uav_power, r.max_residual, r.subproblem_status, round(r.wall_ms, 3)]
            for r in trace.records]
    write_csv(out, TRACE_HEADER, rows)
    write_meta(out, {"command": "run", "seed": cfg.seed, "status": trace.status,
                     "message": trace.message, "allocation": alloc.as_dict()})
    return trace


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple[float, ...]
    seeds: int = 20
    methods: tuple[Method, ...] = (Method.SFL,)
    base: GenerationConfig = GenerationConfig()
    # sweeps report the power each allocation needs, above the cap if necessary
    enforce_uav_cap: bool = False

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.param!r}; expected one of {sorted(SWEEP_PARAMS)}")
        if not self.values or any(not v > 0 for v in self.values):
            raise ValueError("sweep values must be a nonempty list of positive numbers")
        if self.param == "nk" and any(int(v) != v for v in self.values):
            raise ValueError("nk values must be integers")
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        if not self.methods:
            raise ValueError("at least one method is required")

    def config_for(self, value: float, seed_index: int) -> GenerationConfig:
        where, name = SWEEP_PARAMS[self.param]
        cfg = replace(self.base, seed=self.base.seed + seed_index)
        if where == "gen":
            return replace(cfg, **{name: int(value)})
        return replace(cfg, system=replace(cfg.system, **{name: float(value)}))


@dataclass
class SweepRow:
    param: str
    value: float
    seed: int
    method: str
    P_watts: float
    t_cm_mean_s: float
    t_cp_mean_s: float
    iterations: int
    wall_ms: float
    status: str

    def csv_fields(self) -> list:
        return [self.param, self.value, self.seed, self.method, self.P_watts, self.t_cm_mean_s,
                self.t_cp_mean_s, self.iterations, self.status]


def _run_method(s, m: Method, enforce_cap: bool):
    """(P, mean t_cm, mean t_cp, iterations, wall ms, status) for one method."""
    t0 = time.perf_counter()
    try:
        alloc, trace = baselines.run_baseline(s, m, RunOptions(enforce_uav_cap=enforce_cap))
    except (InfeasibleStart, ValueError) as e:
        return np.nan, np.nan, np.nan, 0, 1e3 * (time.perf_counter() - t0), f"error: {e}"
    t_cp = s.local_iters * physics.comp_time(s.workload, alloc.f)
    return (alloc.uav_power, float(alloc.t.mean()), float(t_cp.mean()), trace.iterations,
            1e3 * (time.perf_counter() - t0), trace.status)


def _sweep_cell(args) -> list[SweepRow]:
    spec, value, i = args
    cfg = spec.config_for(value, i)
    s = generate_scenario(cfg)  # one Scenario shared by every method of the cell
    rows = []
    for m in spec.methods:
        P, tcm, tcp, its, ms, status = _run_method(s, m, spec.enforce_uav_cap)
        rows.append(SweepRow(spec.param, float(value), cfg.seed, m.value, P, tcm, tcp, its, ms, status))
    return rows


def _map(fn, jobs, width: int):
    if width <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=width) as ex:
        # map preserves submission order, so output order is fixed
        return list(ex.map(fn, jobs))


def run_sweep(spec: SweepSpec, width: int | None = None) -> list[SweepRow]:
    jobs = [(spec, v, i) for v in spec.values for i in range(spec.seeds)]
    cells = _map(_sweep_cell, jobs, pool_width() if width is None else width)
    return [r for cell in cells for r in cell]


def _ok(status: str) -> bool:
    return status in ("converged", "max_iters")


def aggregate(rows: list[SweepRow]) -> list[SweepRow]:
    """Per-(value, method) means over successful rows, in first-appearance order."""
    keys = list(dict.fromkeys((r.value, r.method) for r in rows))
    out = []
    for value, method in keys:
        grp = [r for r in rows if r.value == value and r.method == method]
        good = [r for r in grp if _ok(r.status)]
        mean = (lambda a: float(np.mean(a))) if good else (lambda a: np.nan)
        out.append(SweepRow(grp[0].param, value, -1, method,
                            mean([r.P_watts for r in good]), mean([r.t_cm_mean_s for r in good]),
                            mean([r.t_cp_mean_s for r in good]),
                            int(round(np.mean([r.iterations for r in good]))) if good else 0,
                            float(sum(r.wall_ms for r in grp)), f"mean_of_{len(good)}/{len(grp)}"))
    return out


def cmd_sweep(spec: SweepSpec, out: str | Path, width: int | None = None) -> tuple[list[SweepRow], list[SweepRow]]:
    rows = run_sweep(spec, width)
    agg = aggregate(rows)
    lines = [r.csv_fields() for r in rows]
    # aggregate rows carry seed "mean"
    lines += [[a.param, a.value, "mean", *a.csv_fields()[3:]] for a in agg]
    write_csv(out, SWEEP_HEADER, lines)
    write_meta(out, {"command": "sweep", "param": spec.param, "values": list(spec.values),
                     "seeds": spec.seeds, "methods": [m.value for m in spec.methods],
                     "base_seed": spec.base.seed,
                     "row_wall_ms": [round(r.wall_ms, 3) for r in rows]})
    return rows, agg


# ---------------------------------------------------------------------------
# comparison

@dataclass(frozen=True)
class CompareSummary:
    mean_power: dict[str, float]
    mean_reduction_pct: dict[str, float]

    def text(self) -> str:
        lines = [f"mean P [{m}] = {p:.6g} W" for m, p in self.mean_power.items()]
        lines += [f"SFL vs {m.upper()}: mean reduction {r:.2f}%" for m, r in self.mean_reduction_pct.items()]
        return "\n".join(lines)


def cmd_compare(cfg: GenerationConfig, seeds: int, out: str | Path,
                methods: tuple[Method, ...] = tuple(Method), width: int | None = None,
                enforce_uav_cap: bool = False) -> tuple[list[SweepRow], CompareSummary]:
    """All methods on matched seeds plus mean reductions 100 (P_m - P_sfl) / P_m."""
    methods = tuple(Method(m) for m in methods)
    if Method.SFL not in methods:
        methods = (Method.SFL, *methods)
    spec = SweepSpec("nk", (float(cfg.local_iters),), seeds, methods, cfg, enforce_uav_cap)
    rows = run_sweep(spec, width)
    by_seed: dict[int, dict[str, SweepRow]] = {}
    for r in rows:
        by_seed.setdefault(r.seed, {})[r.method] = r

    lines, red = [], {m.value: [] for m in methods if m is not Method.SFL}
    for seed, group in by_seed.items():
        ref = group[Method.SFL.value]
        for m in methods:
            r = group[m.value]
            pct = np.nan
            if m is not Method.SFL and _ok(r.status) and _ok(ref.status):
                pct = 100.0 * (r.P_watts - ref.P_watts) / r.P_watts
                red[m.value].append(pct)
            lines.append([seed, m.value, r.P_watts, pct, r.t_cm_mean_s, r.t_cp_mean_s, r.iterations, r.status])

    mean_power = {}
    for m in methods:
        good = [g[m.value].P_watts for g in by_seed.values() if _ok(g[m.value].status)]
        mean_power[m.value] = float(np.mean(good)) if good else np.nan
    mean_red = {m: float(np.mean(v)) for m, v in red.items() if v}
    for m in methods:
        lines.append(["mean", m.value, mean_power[m.value], mean_red.get(m.value, np.nan), "", "", "", "summary"])
    write_csv(out, COMPARE_HEADER, lines)
    summary = CompareSummary(mean_power, mean_red)
    write_meta(out, {"command": "compare", "seeds": seeds, "base_seed": cfg.seed,
                     "methods": [m.value for m in methods], "summary": asdict(summary),
                     "row_wall_ms": [round(r.wall_ms, 3) for r in rows]})
    return rows, summary
