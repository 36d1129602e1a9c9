"""End-to-end acceptance checks; each test reports one PASS/FAIL line."""

import time

import numpy as np
import pytest

from uavsfl import harness, optimizer, physics, sca
from uavsfl.baselines import Method
from uavsfl.oracle import GridSpec, brute_force_min_power, finite_diff_check
from uavsfl.scenario import default_config, generate_scenario, precheck_feasibility
from uavsfl.subsolver import Phase1Problem, Point, SubproblemSpec

from conftest import ACCEPTANCE_LINES

SEEDS = 20


def report(n: int, ok: bool, detail: str):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _sweep(param, values, methods=(Method.SFL,)):
    spec = harness.SweepSpec(param, tuple(values), SEEDS, methods, default_config(seed=0))
    rows = harness.run_sweep(spec)
    bad = [r for r in rows if r.status != "converged"]
    assert not bad, bad[:3]
    return {v: [r for r in rows if r.value == v] for v in values}


def _mean(rows, field):
    return float(np.mean([getattr(r, field) for r in rows]))


def test_c1_surrogates():
    rng = np.random.default_rng(1)
    n = 100_000
    t0 = time.perf_counter()
    lg = lambda size: 10 ** rng.uniform(-3, 3, size)
    x, y, tau, xb, yb, taub = (lg(n) for _ in range(6))
    lemma_gap = np.max(sca.lemma1_rhs(x, y, tau, xb, yb, taub) - tau * np.log1p(1 / (x * y)))
    lemma_tight = np.max(np.abs(sca.lemma1_rhs(xb, yb, taub, xb, yb, taub) / (taub * np.log1p(1 / (xb * yb))) - 1))

    g0, beta0 = 1e13, 0.72
    bb, pb, ub = 10 ** rng.uniform(4, 7, n), 10 ** rng.uniform(-6, -2, n), rng.uniform(400, 5000, n)
    c = sca.coeffs_from_point(bb, pb, ub, g0, 1.0, beta0)
    b, p, u = bb * 10 ** rng.uniform(-1, 1, n), pb * 10 ** rng.uniform(-1, 1, n), ub * 10 ** rng.uniform(-0.3, 0.3, n)
    true = sca.true_rate_g0(b, p, u, g0)
    rate_gap = np.max((sca.surrogate_rate(b, p, u, c) - true) / true)
    rate_tight = np.max(np.abs(sca.surrogate_rate(bb, pb, ub, c) / sca.true_rate_g0(bb, pb, ub, g0) - 1))

    P = rng.uniform(0, 10, n)
    phi_gap = np.max((sca.phi_linearize(u, ub, 1.0, beta0) * P - P * beta0 / u) / (P * beta0 / u))
    phi_tight = np.max(np.abs(sca.phi_linearize(ub, ub, 1.0, beta0) / (beta0 / ub) - 1))
    dt = time.perf_counter() - t0
    ok = (lemma_gap <= 1e-12 and rate_gap <= 1e-12 and phi_gap <= 1e-12
          and max(lemma_tight, rate_tight, phi_tight) <= 1e-9 and dt < 5)
    report(1, ok, f"max minorant gaps {lemma_gap:.1e}/{rate_gap:.1e}/{phi_gap:.1e}, "
                  f"tightness {max(lemma_tight, rate_tight, phi_tight):.1e}, {dt:.2f}s")


def test_c2_gradients():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    s = generate_scenario(default_config(seed=4, num_users=5))
    st = optimizer.initialize(s)
    a = st.alloc
    worst = 0.0
    for _ in range(100):
        spec = SubproblemSpec(sca.make_coeffs(a, s.params), a.t * rng.uniform(0.2, 1.0, s.K), a.f,
                              a.uav_power * rng.uniform(0.3, 1.0), s)
        prob = Phase1Problem(spec)
        z = prob.pack(Point(a.p, a.b, a.q, a.u), rng.normal())
        z[prob.iv] += rng.normal(0, 0.5, s.K)
        z[prob.iy] += rng.normal(0, 0.5, s.K)
        z[prob.iw] *= np.exp(rng.normal(0, 0.2, s.K))
        z[prob.iq] += rng.normal(0, 5, 2)
        _, J, _ = prob.derivatives(z)
        Jfd = prob.jacobian_fd(z, 1e-6)
        # per-constraint error, scaled by that constraint's largest partial
        scale = np.maximum(np.maximum(np.abs(J), np.abs(Jfd)).max(axis=1), 1e-300)
        worst = max(worst, float(np.max(np.abs(J - Jfd).max(axis=1) / scale)))
        # surrogate rate and tangent partials in their own variables
        c = spec.coeffs
        k = int(rng.integers(s.K))
        ck = sca.SurrogateCoeffs(c.lam[k:k + 1], c.mu[k:k + 1], c.nu[k:k + 1], c.b_bar[k:k + 1],
                                 c.p_bar[k:k + 1], c.u_bar[k:k + 1], c.uav_power, c.beta0)
        x = np.array([c.b_bar[k], c.p_bar[k], c.u_bar[k]]) * rng.uniform(0.5, 2.0, 3)
        worst = max(worst, finite_diff_check(lambda v: float(sca.surrogate_rate(*v, ck)[0]),
                                             lambda v: np.array([g[0] for g in sca.surrogate_rate_grad(*v, ck)]), x))
        worst = max(worst, finite_diff_check(lambda v: float(sca.phi_linearize(v, c.u_bar[k], c.uav_power, c.beta0)[0]),
                                             lambda v: sca.phi_grad(v, c.u_bar[k], c.uav_power, c.beta0), x[2:]))
    dt = time.perf_counter() - t0
    report(2, worst <= 1e-5 and dt < 5, f"max relative gradient error {worst:.2e} over 100 points, {dt:.2f}s")


@pytest.fixture(scope="module")
def default_traces():
    out, seed = [], 0
    while len(out) < 50:
        s = generate_scenario(default_config(seed=seed))
        seed += 1
        if not precheck_feasibility(s).passed:
            continue
        t0 = time.perf_counter()
        a, tr = optimizer.run(s)
        out.append((s, a, tr, time.perf_counter() - t0))
    return out


def test_c3_end_to_end_feasibility(default_traces):
    conv = sum(tr.converged and tr.iterations <= 100 for _, _, tr, _ in default_traces)
    worst_res = max(physics.residuals(a, s).max_violation for s, a, _, _ in default_traces)
    slowest = max(dt for *_, dt in default_traces)
    ok = conv == 50 and worst_res <= 1e-6 and slowest <= 10
    report(3, ok, f"{conv}/50 converged, worst residual {worst_res:.2e}, slowest {slowest:.2f}s")


def test_c4_convergence_shape(default_traces):
    rises = [float(np.max(np.diff(tr.powers), initial=0.0)) for _, _, tr, _ in default_traces]
    within = np.mean([tr.iterations <= 30 for _, _, tr, _ in default_traces])
    ok = max(rises) <= 1e-9 and within >= 0.9
    report(4, ok, f"largest P rise {max(rises):.1e} W, {100 * within:.0f}% within 30 iterations, "
                  f"max {max(tr.iterations for _, _, tr, _ in default_traces)}")


def test_c5_trend_local_iterations():
    vals = [2, 4, 6, 8]
    cells = _sweep("nk", vals)
    P = [_mean(cells[v], "P_watts") for v in vals]
    tcp = [_mean(cells[v], "t_cp_mean_s") for v in vals]
    tcm = [_mean(cells[v], "t_cm_mean_s") for v in vals]
    ok = bool(np.all(np.diff(P) > 0) and np.all(np.diff(tcp) > 0) and np.all(np.diff(tcm) < 0))
    report(5, ok, "P " + ", ".join(f"{x:.4g}" for x in P) + " W; t_cp " + ", ".join(f"{x:.3g}" for x in tcp)
           + " s; t_cm " + ", ".join(f"{x:.3g}" for x in tcm) + " s")


def test_c6_trend_payload():
    vals = [50e3, 100e3, 150e3, 200e3]
    cells = _sweep("payload", vals)
    P = [_mean(cells[v], "P_watts") for v in vals]
    report(6, bool(np.all(np.diff(P) > 0)), "P " + ", ".join(f"{x:.5g}" for x in P) + " W")


def test_c7_trend_bandwidth():
    vals = [10e6, 15e6, 20e6, 25e6, 30e6]
    cells = _sweep("bandwidth", vals)
    P = [_mean(cells[v], "P_watts") for v in vals]
    change = abs(P[-1] - P[0]) / P[0]
    ok = bool(np.all(np.diff(P) <= 0) and change <= 0.2)
    report(7, ok, "P " + ", ".join(f"{x:.5g}" for x in P) + f" W, total change {100 * change:.2f}%")


def test_c8_baselines(tmp_path):
    rows, summary = harness.cmd_compare(default_config(seed=0), SEEDS, tmp_path / "compare.csv")
    by_seed = {}
    for r in rows:
        assert r.status == "converged", r
        by_seed.setdefault(r.seed, {})[r.method] = r.P_watts
    dominated = all(g["sfl"] <= g[m] + 1e-6 for g in by_seed.values() for m in ("ff", "ft", "fup"))
    mp, red = summary.mean_power, summary.mean_reduction_pct
    ordered = mp["ft"] >= mp["ff"] >= mp["fup"] >= mp["sfl"]
    ok = dominated and ordered and all(red[m] > 0 for m in ("ff", "ft", "fup"))
    report(8, ok, f"dominance on every seed: {dominated}; mean P FT {mp['ft']:.4g} >= FF {mp['ff']:.4g} "
                  f">= FUP {mp['fup']:.4g} >= SFL {mp['sfl']:.4g}; reductions FUP {red['fup']:.2f}% "
                  f"FF {red['ff']:.2f}% FT {red['ft']:.2f}%")


def test_c9_oracle():
    t0 = time.perf_counter()
    grid = GridSpec()
    ratios, feasible = [], True
    for K, n in ((1, 10), (2, 5)):
        for i in range(n):
            s = generate_scenario(default_config(seed=1000 + i, num_users=K))
            P_star, a_star = brute_force_min_power(s, grid)
            feasible &= physics.residuals(a_star, s).max_violation <= 0
            a, _ = optimizer.run(s)
            ratios.append(a.uav_power / P_star)
    dt = time.perf_counter() - t0
    ok = max(ratios) <= 1.15 and feasible and dt <= 120
    report(9, ok, f"optimizer/oracle ratio max {max(ratios):.4f} (min {min(ratios):.4f}), "
                  f"oracle points feasible: {feasible}, {dt:.1f}s, grid {grid}")
