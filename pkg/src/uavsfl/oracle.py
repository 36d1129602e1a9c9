"""Brute-force references for small instances and a central-difference gradient check.

Nothing here touches the surrogate or solver code: the grid search scores points
with the exact physics models, so agreement with the optimiser is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import physics
from .physics import Allocation


class OracleInfeasible(RuntimeError):
    """No grid point satisfies every constraint."""


@dataclass(frozen=True)
class GridSpec:
    q_points: int = 15  # per axis over the placement square, disc-filtered
    b_split: int = 7  # bandwidth fractions for the first of two users
    t_points: int = 16
    f_points: int = 8
    p_points: int = 16
    max_evals: int = 10_000_000

    def __post_init__(self):
        for name in ("q_points", "b_split", "t_points", "f_points", "p_points"):
            if getattr(self, name) < 3:
                raise ValueError(f"{name} must be at least 3")
        if self.max_evals <= 0:
            raise ValueError("max_evals must be positive")

    def refined(self, factor: int = 2) -> "GridSpec":
        """Grid whose axes contain the points of this one (odd sizes stay nested)."""
        up = lambda n: (n - 1) * factor + 1
        return GridSpec(up(self.q_points), (self.b_split + 1) * factor - 1, up(self.t_points),
                        up(self.f_points), up(self.p_points), self.max_evals * factor**5)


def _q_grid(C: float, n: int) -> np.ndarray:
    ax = np.linspace(-C, C, n)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    q = np.column_stack([X.ravel(), Y.ravel()])
    return q[np.sum(q * q, axis=1) <= C * C * (1 + 1e-12)]


def _axes(s, k: int, g: GridSpec):
    T = s.params.frame_s
    # t strictly inside (0, T); geometric spacing resolves the short uploads
    t = T * np.geomspace(1e-4, 1.0 - 1e-6, g.t_points)
    f = np.linspace(s.cpu_min[k], s.cpu_max[k], g.f_points)
    p = s.pmax[k] * np.geomspace(1e-6, 1.0, g.p_points)
    return t, f, p


def _user_min_energy(s, k: int, q: np.ndarray, b: np.ndarray, g: GridSpec):
    """Per (q, b) cheapest feasible round energy of user k and the (t, f, p) reaching it.

    The search over (t, f, p) decomposes exactly: for each t the cheapest
    time-feasible f does not depend on the link, and the cheapest rate-feasible
    p does not depend on f.
    """
    prm = s.params
    t, f, p = _axes(s, k, g)
    N, W = s.local_iters[k], s.workload[k]
    time_ok = N * physics.comp_time(W, f)[None, :] + t[:, None] <= prm.frame_s  # (t, f)
    e_cp = np.where(time_ok, N * physics.comp_energy(s.chip_coeff[k], W, f)[None, :], np.inf)
    jf = np.argmin(e_cp, axis=1)
    e_cp_min = e_cp[np.arange(len(t)), jf]  # (t,)

    d = physics.distance(q, s.positions[k], prm.altitude_m)
    gain = physics.channel_gain(d, prm)
    # shapes: q, b, t, p
    R = physics.rate(b[None, :, None, None], p[None, None, None, :],
                     gain[:, None, None, None], prm.noise_psd_w_per_hz)
    ok = t[None, None, :, None] * R >= prm.payload_bits
    # p is ascending, so the first feasible index is the cheapest
    lp = np.argmax(ok, axis=3)
    has = ok.any(axis=3)
    e = np.where(has, e_cp_min[None, None, :] + t[None, None, :] * p[lp], np.inf)  # (q, b, t)
    it = np.argmin(e, axis=2)
    e_best = np.take_along_axis(e, it[..., None], axis=2)[..., 0]
    lp_best = np.take_along_axis(lp, it[..., None], axis=2)[..., 0]
    return e_best, t[it], f[jf[it]], p[lp_best], gain


def brute_force_min_power(s, grid: GridSpec | None = None) -> tuple[float, Allocation]:
    """Grid minimum of the UAV power for one or two users, scored on the exact models."""
    grid = grid or GridSpec()
    K = s.K
    if K < 1 or K > 2:
        raise ValueError("brute force is limited to one or two users")
    prm = s.params
    q = _q_grid(prm.placement_radius_m, grid.q_points)
    B = prm.bandwidth_hz
    if K == 1:
        splits = np.array([1.0])
    else:
        splits = np.linspace(0.0, 1.0, grid.b_split + 2)[1:-1]
    n_evals = len(q) * len(splits) * grid.t_points * grid.f_points * grid.p_points * K
    if n_evals > grid.max_evals:
        raise ValueError(f"grid needs {n_evals} evaluations, above the cap of {grid.max_evals}")

    need = np.zeros((len(q), len(splits)))
    picks = []
    for k in range(K):
        b = B * (splits if k == 0 else 1.0 - splits)
        e, tk, fk, pk, gain = _user_min_energy(s, k, q, b, grid)
        u = 1.0 / (gain[:, None] / prm.ref_gain_linear)  # d^alpha
        need = np.maximum(need, u * e / prm.beta0)
        picks.append((b, tk, fk, pk))
    need = np.where(need <= prm.uav_pmax_w, need, np.inf)
    if not np.isfinite(need).any():
        raise OracleInfeasible("no feasible grid point")
    iq, ib = np.unravel_index(np.argmin(need), need.shape)
    P = float(need[iq, ib]) * (1 + 1e-12)  # tie the harvest strictly above demand
    cols = [[pick[0][ib] for pick in picks]] + [[pick[j][iq, ib] for pick in picks] for j in (1, 2, 3)]
    b_arr, t_arr, f_arr, p_arr = (np.array(c, dtype=float) for c in cols)
    qs = q[iq]
    alloc = Allocation(P, p_arr, f_arr, b_arr, t_arr, qs, physics.u_bound(qs, s))
    return P, alloc


def finite_diff_check(fn, grad, point, h: float = 1e-6) -> float:
    """Max relative gap between ``grad(point)`` and central differences of scalar ``fn``.

    Step is ``h`` times each coordinate's magnitude (``h`` itself at zero); the gap is
    scaled by the largest gradient entry so near-zero partials do not blow up.
    """
    x = np.asarray(point, dtype=float)
    a = np.atleast_1d(np.asarray(grad(x), dtype=float))
    fd = np.empty_like(a)
    for i in range(x.size):
        step = h * (abs(x.flat[i]) or 1.0)
        xp, xm = x.copy(), x.copy()
        xp.flat[i] += step
        xm.flat[i] -= step
        fd[i] = (fn(xp) - fn(xm)) / (2.0 * step)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(fd))), 1e-300)
    return float(np.max(np.abs(a - fd)) / scale)
