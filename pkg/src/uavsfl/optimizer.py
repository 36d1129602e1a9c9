"""Block-update outer loop: bisection-style t and P steps, closed-form f, convex (p, b, q, u) solve."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import physics
from .physics import Allocation, residuals
from .sca import make_coeffs
from .subsolver import Point, SolverOptions, Status, SubproblemSpec, clamp_u_to_bound, solve_feasibility

log = logging.getLogger(__name__)


class InfeasibleStart(RuntimeError):
    def __init__(self, constraint: str, detail: str = ""):
        super().__init__(f"no feasible starting point: constraint {constraint} violated{detail}")
        self.constraint = constraint


@dataclass(frozen=True)
class RunOptions:
    eps: float | None = None  # None -> params.conv_eps
    max_outer_iters: int | None = None  # None -> params.max_outer_iters
    solver: SolverOptions = field(default_factory=SolverOptions)
    # restrictions used by the comparison schemes; None means optimised
    fixed_f: np.ndarray | None = None
    fixed_t: np.ndarray | None = None
    fixed_q: np.ndarray | None = None
    # when False the UAV power cap only seeds the bracket and may be exceeded
    enforce_uav_cap: bool = True
    # finish with the per-user exact energy minimisation
    refine: bool = True


@dataclass
class OuterState:
    alloc: Allocation
    t_max: np.ndarray
    t_min: np.ndarray
    P_max_bracket: float
    P_min_bracket: float
    kappa: int = 0
    t_collapsed: bool = False
    P_collapsed: bool = False


@dataclass
class IterRecord:
    iter: int
    uav_power: float
    P_min: float
    subproblem_status: str
    sigma: float
    inner_iters: int
    max_residual: float
    block_ms: dict
    wall_ms: float


@dataclass
class RunTrace:
    records: list[IterRecord] = field(default_factory=list)
    status: str = "running"
    message: str = ""

    @property
    def powers(self) -> np.ndarray:
        return np.array([r.uav_power for r in self.records])

    @property
    def iterations(self) -> int:
        """Outer iterations, excluding the start point and the final refinement."""
        return sum(r.subproblem_status not in ("init", "refine") for r in self.records)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _opts_eps(s, options: RunOptions) -> tuple[float, int]:
    eps = s.params.conv_eps if options.eps is None else options.eps
    cap = s.params.max_outer_iters if options.max_outer_iters is None else options.max_outer_iters
    return eps, cap


def max_time_eq4(s) -> np.ndarray:
    """Upper transmission-time bound with the CPU at full speed."""
    return s.params.frame_s - s.local_iters * s.workload / s.cpu_max


def optimal_frequency(s, t) -> np.ndarray:
    """Slowest clock that still finishes the local iterations within the frame."""
    with np.errstate(divide="ignore"):
        f_low = s.local_iters * s.workload / (s.params.frame_s - np.asarray(t, dtype=float))
    f_low = np.where(f_low > 0, f_low, np.inf)
    return np.minimum(np.maximum(f_low, s.cpu_min), s.cpu_max)


def min_time(s, b, p, u) -> np.ndarray:
    """Time needed to push the payload at rate b log2(1 + p g0 / (b u))."""
    R = b * np.log1p(p * s.params.g0 / (b * u)) / physics.LN2
    with np.errstate(divide="ignore"):
        return np.where(R > 0, s.params.payload_bits / R, np.inf)


def per_user_power(s, alloc: Allocation) -> np.ndarray:
    """UAV power each user needs: (u_k / beta0) (N E_cp + t p)."""
    used = physics.energy_demand(s, alloc.f, alloc.t, alloc.p)
    return alloc.u / s.params.beta0 * used


def _start_time(s, k, t_lo, t_hi, p, cap_energy, fixed_f) -> float:
    """Largest t in [t_lo, t_hi] whose round energy fits the harvest at full UAV power."""
    N, W, z = s.local_iters[k], s.workload[k], s.chip_coeff[k]
    T = s.params.frame_s
    fmin, fmax = s.cpu_min[k], s.cpu_max[k]

    def slack(t):
        if fixed_f is not None:
            f = fixed_f[k]
        else:
            f = min(max(N * W / (T - t), fmin), fmax)
        return cap_energy - (N * z * W * f * f + t * p)

    if slack(t_hi) >= 0:
        return t_hi
    if slack(t_lo) < 0:
        return t_lo
    return brentq(slack, t_lo, t_hi, xtol=1e-15, rtol=1e-12)


def initialize(s, options: RunOptions | None = None) -> OuterState:
    """Build a feasible starting point.

    UAV over the user centroid, u at its bound, equal bandwidth, full user power.
    Each user's time starts at the largest value inside the full-speed bound that
    its harvest at the UAV power cap can pay for; f follows from the time.
    """
    options = options or RunOptions()
    prm = s.params
    K = s.K
    q = s.centroid() if options.fixed_q is None else np.asarray(options.fixed_q, dtype=float)
    u = physics.u_bound(q, s)
    b = np.full(K, prm.bandwidth_hz / max(K, 1))
    p = s.pmax.copy()
    fixed_f = None if options.fixed_f is None else np.asarray(options.fixed_f, dtype=float)
    t_hi = max_time_eq4(s) if fixed_f is None else prm.frame_s - s.local_iters * s.workload / fixed_f
    if np.any(t_hi <= 0):
        k = int(np.argmin(t_hi))
        raise InfeasibleStart("time", f" (user {k} cannot finish its local iterations within the frame)")
    t_lo = min_time(s, b, p, u)
    P_top = prm.uav_pmax_w
    if options.fixed_t is not None:
        t = np.asarray(options.fixed_t, dtype=float).copy()
    else:
        if not options.enforce_uav_cap:
            # uncapped: the bracket starts at whatever the fastest upload needs
            f_lo = optimal_frequency(s, t_lo) if fixed_f is None else fixed_f
            probe = Allocation(P_top, p, f_lo, b, t_lo, q, u)
            need = float(per_user_power(s, probe).max()) if K else 0.0
            if need > P_top:
                # leave bisection room above the requirement
                P_top = 2.0 * need
        cap = P_top * prm.beta0 / u * (1 - 1e-9)
        hi = np.maximum(t_hi, t_lo)
        t = np.array([_start_time(s, k, t_lo[k], hi[k], p[k], cap[k], fixed_f) for k in range(K)])
    f = optimal_frequency(s, t) if fixed_f is None else fixed_f.copy()
    alloc = Allocation(P_top, p, f, b, t, q, u)
    P_need = float(per_user_power(s, alloc).max()) if K else 0.0
    if not options.enforce_uav_cap and P_need > alloc.uav_power:
        alloc.uav_power = P_need * (1 + 1e-9)
    res = residuals(alloc, s)
    if res.max_violation > 0:
        worst = res.worst()
        if worst != "uav_power" or options.enforce_uav_cap:
            label = {"energy": "energy (harvest)", "rate": "rate", "time": "time"}.get(worst, worst)
            raise InfeasibleStart(label, f" (normalised residual {res.max_violation:.3e})")
    return OuterState(alloc, t_max=t.copy(), t_min=t_lo.copy(),
                      P_max_bracket=alloc.uav_power, P_min_bracket=P_need)


def update_time(state: OuterState, s) -> OuterState:
    a = state.alloc
    t_min = min_time(s, a.b, a.p, a.u)
    t_max = state.t_max
    collapsed = t_min > t_max
    t = np.where(collapsed, t_max, 0.5 * (t_max + t_min))
    return replace(state, alloc=a.copy(t=t), t_min=t_min, t_max=t.copy(), t_collapsed=bool(collapsed.any()))


def update_frequency(state: OuterState, s) -> OuterState:
    a = state.alloc
    if np.any(a.t >= s.params.frame_s):
        raise ValueError("transmission time fills the whole frame")
    return replace(state, alloc=a.copy(f=optimal_frequency(s, a.t)))


def update_uav_power(state: OuterState, s) -> OuterState:
    a = state.alloc
    P_min = float(per_user_power(s, a).max()) if s.K else 0.0
    top = state.P_max_bracket
    if P_min > top:
        P, collapsed = P_min, True
    else:
        P, collapsed = 0.5 * (top + P_min), False
    return replace(state, alloc=a.copy(uav_power=P), P_min_bracket=P_min,
                   P_max_bracket=P_min, P_collapsed=collapsed)


def _true_ok(s, alloc: Allocation, tol: float = 1e-9) -> bool:
    return residuals(alloc, s).max_violation <= tol


def solve_block(state: OuterState, s, options: RunOptions):
    """Run the surrogate feasibility solve and fold an accepted point into the state."""
    a = state.alloc
    coeffs = make_coeffs(a, s.params)
    spec = SubproblemSpec(coeffs, a.t, a.f, a.uav_power, s, options.fixed_q)
    warm = Point(a.p, a.b, a.q, a.u)
    res = solve_feasibility(spec, warm, options.solver)
    accepted = False
    if res.status is Status.FEASIBLE:
        pt = clamp_u_to_bound(res.point, s)
        cand = a.copy(p=pt.p, b=pt.b, q=pt.q, u=pt.u)
        if _true_ok(s, cand, 0.0) or not _true_ok(s, a, 0.0):
            state = replace(state, alloc=cand)
            accepted = True
    return state, res, accepted


def required_power(s, t, b, u) -> np.ndarray:
    """User power that makes the upload rate exactly s / t."""
    prm = s.params
    return b * u / prm.g0 * np.expm1(prm.payload_bits * physics.LN2 / (t * b))


def _user_energy(s, k, t, b, u, fixed_f):
    N, W, z = s.local_iters[k], s.workload[k], s.chip_coeff[k]
    f = fixed_f[k] if fixed_f is not None else min(max(N * W / (s.params.frame_s - t), s.cpu_min[k]), s.cpu_max[k])
    p = required_power(s, t, b, u)
    return N * z * W * f * f + t * p, f, p


def refine_energy(s, alloc: Allocation, options: RunOptions) -> Allocation:
    """Per-user exact (t, f, p) energy minimisation with (P, q, u, b) held fixed.

    Lower energy never breaks a harvest constraint, so the result stays
    feasible; the UAV power is then cut to the largest per-user requirement.
    """
    K = s.K
    if K == 0:
        return alloc
    fixed_f = None if options.fixed_f is None else np.asarray(options.fixed_f, dtype=float)
    T = s.params.frame_s
    b, u = alloc.b, physics.u_bound(alloc.q, s)
    t_new, f_new, p_new = alloc.t.copy(), alloc.f.copy(), alloc.p.copy()
    used = physics.energy_demand(s, alloc.f, alloc.t, alloc.p)
    t_rate = min_time(s, b, s.pmax, u)
    f_top = s.cpu_max if fixed_f is None else fixed_f
    t_top = T - s.local_iters * s.workload / f_top
    for k in range(K):
        if options.fixed_t is not None:
            cands = [alloc.t[k]]
        else:
            lo, hi = t_rate[k] * (1 + 1e-9), t_top[k] * (1 - 1e-12)
            if not lo < hi:
                continue
            res = minimize_scalar(lambda x: _user_energy(s, k, x, b[k], u[k], fixed_f)[0],
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-9 * hi})
            cands = [res.x, lo, hi]
        best = None
        for tk in cands:
            e, fk, pk = _user_energy(s, k, tk, b[k], u[k], fixed_f)
            pk *= 1 + 1e-9  # keep the rate strictly above the payload
            e = physics.energy_demand_one(s, k, fk, tk, pk)
            if pk <= s.pmax[k] and (best is None or e < best[0]):
                best = (e, tk, fk, pk)
        if best is not None and best[0] < used[k]:
            _, t_new[k], f_new[k], p_new[k] = best
    cand = alloc.copy(t=t_new, f=f_new, p=p_new, u=u)
    need = float(per_user_power(s, cand).max()) * (1 + 1e-12)
    cand.uav_power = min(alloc.uav_power, need)
    if residuals(cand, s).max_violation > max(0.0, residuals(alloc, s).max_violation):
        return alloc
    return cand


def run(s, options: RunOptions | None = None) -> tuple[Allocation, RunTrace]:
    """Iterate the block updates until the relative UAV-power change drops below eps."""
    options = options or RunOptions()
    eps, cap = _opts_eps(s, options)
    trace = RunTrace()
    t0 = time.perf_counter()
    state = initialize(s, options)
    res0 = residuals(state.alloc, s)
    trace.records.append(IterRecord(0, state.alloc.uav_power, state.P_min_bracket, "init", np.nan, 0,
                                    res0.max_violation, {}, 1e3 * (time.perf_counter() - t0)))
    last_feasible = state.alloc
    fails = 0
    for kappa in range(1, cap + 1):
        P_prev = state.alloc.uav_power
        ms = {}
        c = time.perf_counter()
        if options.fixed_t is None:
            state = update_time(state, s)
        ms["t"] = 1e3 * (time.perf_counter() - c)
        c = time.perf_counter()
        if options.fixed_f is None:
            state = update_frequency(state, s)
        ms["f"] = 1e3 * (time.perf_counter() - c)
        c = time.perf_counter()
        state = update_uav_power(state, s)
        ms["P"] = 1e3 * (time.perf_counter() - c)
        c = time.perf_counter()
        state, sub, accepted = solve_block(state, s, options)
        ms["pbqu"] = 1e3 * (time.perf_counter() - c)
        state.kappa = kappa
        r = residuals(state.alloc, s)
        P = state.alloc.uav_power
        trace.records.append(IterRecord(kappa, P, state.P_min_bracket, sub.status.value, sub.slack_sigma,
                                        sub.inner_iters, r.max_violation, ms, 1e3 * (time.perf_counter() - t0)))
        if P > P_prev + 1e-9:
            log.warning("UAV power rose at iteration %d: %.12g -> %.12g", kappa, P_prev, P)
        if r.max_violation <= 1e-9 or (not options.enforce_uav_cap and r.worst() == "uav_power"):
            last_feasible = state.alloc
        if accepted:
            fails = 0
        else:
            fails += 1
            if fails >= 2:
                trace.status = "subproblem_infeasible"
                trace.message = f"surrogate problem infeasible twice in a row at iteration {kappa}"
                return last_feasible, trace
        if abs(P - P_prev) / P_prev <= eps:
            trace.status = "converged"
            break
    else:
        trace.status = "max_iters"
    final = state.alloc
    if options.refine:
        c = time.perf_counter()
        final = refine_energy(s, final, options)
        r = residuals(final, s)
        trace.records.append(IterRecord(trace.records[-1].iter + 1, final.uav_power, final.uav_power, "refine",
                                        np.nan, 0, r.max_violation, {"refine": 1e3 * (time.perf_counter() - c)},
                                        1e3 * (time.perf_counter() - t0)))
    return final, trace
