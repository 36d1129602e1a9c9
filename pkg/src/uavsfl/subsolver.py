"""Convex feasibility solve over the (p, b, q, u) block for fixed (t, f, P).

The surrogate problem is posed as a phase-I program: minimise one scalar slack
``sigma`` with every normalised rate and energy constraint bounded by ``sigma``
while the box, bandwidth, placement and disc constraints stay hard. It is solved
with a log-barrier method and damped Newton steps on analytic derivatives.

Variables are ``v = ln p``, ``y = ln b``, ``w = u / u_bar``, ``q`` and ``sigma``.
The log change keeps every constraint convex: -R_hat is a sum of exponentials and
a squared positive sum of them, and the placement term stays in linear ``u``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .physics import LN2, u_bound
from .sca import B_FLOOR, P_FLOOR, SurrogateCoeffs


class Status(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    MAX_ITERS = "max_iters"


class SolverFailure(RuntimeError):
    """Non-finite values appeared inside the barrier iterations."""


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-8
    sigma_margin: float = 1e-9
    max_inner_iters: int = 500
    mu0: float = 1.0
    mu_factor: float = 0.1
    stages: int = 6
    newton_tol: float = 1e-10
    # max_slack drives sigma to its barrier optimum; first_feasible stops at the
    # first iterate with sigma <= -sigma_margin
    mode: str = "max_slack"


@dataclass(frozen=True)
class SubproblemSpec:
    coeffs: SurrogateCoeffs
    t: np.ndarray
    f: np.ndarray
    uav_power: float
    scenario: object
    fixed_q: np.ndarray | None = None


@dataclass
class Point:
    p: np.ndarray
    b: np.ndarray
    q: np.ndarray
    u: np.ndarray

    def copy(self) -> "Point":
        return Point(self.p.copy(), self.b.copy(), self.q.copy(), self.u.copy())


@dataclass
class SubproblemResult:
    status: Status
    point: Point
    slack_sigma: float
    inner_iters: int
    sigma_history: list[float] = field(default_factory=list)


class Phase1Problem:
    """Constraint functions of the surrogate feasibility problem in solver variables."""

    def __init__(self, spec: SubproblemSpec):
        s = spec.scenario
        prm = s.params
        c = spec.coeffs
        self.K = K = c.K
        self.q_free = spec.fixed_q is None
        self.fixed_q = None if self.q_free else np.asarray(spec.fixed_q, dtype=float)
        self.nq = 2 if self.q_free else 0
        self.n = 3 * K + self.nq + 1
        self.iv = np.arange(K)
        self.iy = K + np.arange(K)
        self.iw = 2 * K + np.arange(K)
        self.iq = 3 * K + np.arange(self.nq)
        self.isig = self.n - 1

        t = np.asarray(spec.t, dtype=float)
        f = np.asarray(spec.f, dtype=float)
        self.coeffs = c
        self.kappa = t / (prm.payload_bits * LN2)
        self.t = t
        self.E_cp = s.local_iters * s.chip_coeff * s.workload * f**2
        self.A = spec.uav_power * prm.beta0 / c.u_bar
        demand = self.E_cp + t * c.p_bar
        self.S = np.where(self.A > 0, self.A, demand)
        self.pos = s.positions
        self.H2 = prm.altitude_m**2
        self.alpha = prm.pathloss_exponent
        self.C2 = prm.placement_radius_m**2
        self.B = prm.bandwidth_hz
        self.ln_pmax = np.log(s.pmax)
        self.ln_pfloor = np.log(P_FLOOR)
        self.ln_bfloor = np.log(B_FLOOR)
        # slacked rows: K rate + K energy; hard rows follow
        self.n_slack = 2 * K

    # -- packing -----------------------------------------------------------
    def pack(self, pt: Point, sigma: float) -> np.ndarray:
        z = np.empty(self.n)
        z[self.iv] = np.log(pt.p)
        z[self.iy] = np.log(pt.b)
        z[self.iw] = pt.u / self.coeffs.u_bar
        if self.q_free:
            z[self.iq] = pt.q
        z[self.isig] = sigma
        return z

    def unpack(self, z: np.ndarray) -> Point:
        q = z[self.iq].copy() if self.q_free else self.fixed_q.copy()
        return Point(np.exp(z[self.iv]), np.exp(z[self.iy]), q, z[self.iw] * self.coeffs.u_bar)

    def q_of(self, z):
        return z[self.iq] if self.q_free else self.fixed_q

    # -- values ------------------------------------------------------------
    def slacked_values(self, z: np.ndarray) -> np.ndarray:
        """Normalised rate and energy residuals g (without sigma)."""
        c = self.coeffs
        v, y, w = z[self.iv], z[self.iy], z[self.iw]
        a = c.p_bar * np.exp(-v)
        pi = 0.25 * (w + a) ** 2
        beta = np.exp(y) / c.b_bar
        k = self.kappa
        g_rate = 1.0 - k * (c.lam + 2.0 * c.mu) + k * c.mu * pi + k * c.mu * beta + k * c.nu * np.exp(-y)
        g_energy = (self.E_cp + self.t * np.exp(v) - self.A * (2.0 - w)) / self.S
        return np.concatenate([g_rate, g_energy])

    def hard_values(self, z: np.ndarray) -> np.ndarray:
        c = self.coeffs
        v, y, w = z[self.iv], z[self.iy], z[self.iw]
        q = self.q_of(z)
        dq = q - self.pos
        h = self.H2 + np.sum(dq * dq, axis=1)
        place = (h ** (self.alpha / 2) - c.u_bar * w) / c.u_bar
        parts = [place, v - self.ln_pmax, self.ln_pfloor - v, self.ln_bfloor - y,
                 [np.sum(np.exp(y)) / self.B - 1.0]]
        if self.q_free:
            parts.append([float(q @ q) / self.C2 - 1.0])
        return np.concatenate(parts)

    def constraints(self, z: np.ndarray) -> np.ndarray:
        """All constraint values c(z) <= 0 (slacked rows include -sigma)."""
        return np.concatenate([self.slacked_values(z) - z[self.isig], self.hard_values(z)])

    # -- derivatives -------------------------------------------------------
    def derivatives(self, z: np.ndarray):
        """Constraint values, dense Jacobian, and second-derivative triplets.

        Triplets ``(i, r, s, val)`` list nonzero entries of the Hessian of
        constraint ``i`` (upper and lower entries both present).
        """
        K, c = self.K, self.coeffs
        v, y, w = z[self.iv], z[self.iy], z[self.iw]
        q = self.q_of(z)
        k = self.kappa
        ey, emy = np.exp(y), np.exp(-y)
        ev = np.exp(v)
        a = c.p_bar / ev
        sw = w + a
        beta = ey / c.b_bar
        cvals = self.constraints(z)
        m = len(cvals)
        J = np.zeros((m, self.n))
        rows, cols, vals = [], [], []
        kk = np.arange(K)

        # rate rows 0..K-1
        r = kk
        J[r, self.iv] = -0.5 * k * c.mu * sw * a
        J[r, self.iy] = k * c.mu * beta - k * c.nu * emy
        J[r, self.iw] = 0.5 * k * c.mu * sw
        J[r, self.isig] = -1.0
        half = 0.5 * k * c.mu
        _trip(rows, cols, vals, r, self.iv, self.iv, half * (a * a + sw * a))
        _trip(rows, cols, vals, r, self.iv, self.iw, -half * a, sym=True)
        _trip(rows, cols, vals, r, self.iw, self.iw, half)
        _trip(rows, cols, vals, r, self.iy, self.iy, k * c.mu * beta + k * c.nu * emy)

        # energy rows K..2K-1
        r = K + kk
        J[r, self.iv] = self.t * ev / self.S
        J[r, self.iw] = self.A / self.S
        J[r, self.isig] = -1.0
        _trip(rows, cols, vals, r, self.iv, self.iv, self.t * ev / self.S)

        # placement rows
        r = 2 * K + kk
        dq = q - self.pos
        h = self.H2 + np.sum(dq * dq, axis=1)
        al = self.alpha
        J[r, self.iw] = -1.0
        if self.q_free:
            g1 = al * h ** (al / 2 - 1) / c.u_bar
            J[r, self.iq[0]] = g1 * dq[:, 0]
            J[r, self.iq[1]] = g1 * dq[:, 1]
            g2 = al * (al - 2) * h ** (al / 2 - 2) / c.u_bar
            qi0, qi1 = np.full(K, self.iq[0]), np.full(K, self.iq[1])
            _trip(rows, cols, vals, r, qi0, qi0, g1 + g2 * dq[:, 0] ** 2)
            _trip(rows, cols, vals, r, qi1, qi1, g1 + g2 * dq[:, 1] ** 2)
            _trip(rows, cols, vals, r, qi0, qi1, g2 * dq[:, 0] * dq[:, 1], sym=True)

        # p upper / lower, b lower
        r = 3 * K + kk
        J[r, self.iv] = 1.0
        r = 4 * K + kk
        J[r, self.iv] = -1.0
        r = 5 * K + kk
        J[r, self.iy] = -1.0

        # bandwidth sum
        r0 = 6 * K
        J[r0, self.iy] = ey / self.B
        _trip(rows, cols, vals, np.full(K, r0), self.iy, self.iy, ey / self.B)

        if self.q_free:
            r1 = 6 * K + 1
            J[r1, self.iq] = 2.0 * q / self.C2
            _trip(rows, cols, vals, np.full(2, r1), self.iq, self.iq, np.full(2, 2.0 / self.C2))

        trip = (np.concatenate(rows), np.concatenate(cols[0::2]), np.concatenate(cols[1::2]), np.concatenate(vals))
        return cvals, J, trip

    def jacobian_fd(self, z: np.ndarray, h: float = 1e-6) -> np.ndarray:
        """Central-difference Jacobian (test support)."""
        m = len(self.constraints(z))
        J = np.zeros((m, self.n))
        for j in range(self.n):
            step = h * max(1.0, abs(z[j]))
            zp, zm = z.copy(), z.copy()
            zp[j] += step
            zm[j] -= step
            J[:, j] = (self.constraints(zp) - self.constraints(zm)) / (2 * step)
        return J


def _trip(rows, cols, vals, r, i, j, val, sym=False):
    r = np.asarray(r)
    i = np.broadcast_to(i, r.shape)
    j = np.broadcast_to(j, r.shape)
    val = np.broadcast_to(val, r.shape)
    rows.append(r)
    cols.append(i)
    cols.append(j)
    vals.append(val)
    if sym:
        rows.append(r)
        cols.append(j)
        cols.append(i)
        vals.append(val)


def _barrier(prob: Phase1Problem, z: np.ndarray, mu: float) -> float:
    c = prob.constraints(z)
    if not np.all(c < 0):
        return np.inf
    return z[prob.isig] - mu * np.sum(np.log(-c))


def _newton_system(prob: Phase1Problem, z: np.ndarray, mu: float):
    c, J, (ri, i, j, val) = prob.derivatives(z)
    inv = 1.0 / (-c)
    grad = mu * (J.T @ inv)
    grad[prob.isig] += 1.0
    Hm = (J * inv[:, None] ** 2).T @ J
    np.add.at(Hm, (i, j), val * inv[ri])
    return grad, mu * Hm


def _interior_start(prob: Phase1Problem, pt: Point, spec: SubproblemSpec) -> Point:
    """Nudge a warm start strictly inside the hard constraints."""
    s = spec.scenario
    pt = pt.copy()
    pt.p = np.clip(pt.p, P_FLOOR * (1 + 1e-6), s.pmax * (1 - 1e-6))
    pt.b = np.maximum(pt.b, B_FLOOR * (1 + 1e-6))
    tot = pt.b.sum()
    limit = s.params.bandwidth_hz * (1 - 1e-6)
    if tot > limit:
        pt.b = np.maximum(pt.b * (limit / tot), B_FLOOR * (1 + 1e-9))
    if prob.q_free:
        r = float(np.hypot(*pt.q))
        C = s.params.placement_radius_m * (1 - 1e-7)
        if r > C:
            pt.q = pt.q * (C / r)
    else:
        pt.q = prob.fixed_q.copy()
    bound = u_bound(pt.q, s)
    pt.u = np.maximum(pt.u, bound * (1 + 1e-7))
    return pt


def solve_feasibility(spec: SubproblemSpec, warm_start: Point, options: SolverOptions | None = None) -> SubproblemResult:
    """Solve the phase-I surrogate problem from ``warm_start``.

    Returns ``FEASIBLE`` when the final slack is at most ``-sigma_margin``. In
    ``first_feasible`` mode the first such iterate is returned; in ``max_slack``
    mode the barrier path is followed to its last stage.
    """
    opt = options or SolverOptions()
    prob = Phase1Problem(spec)
    if prob.K == 0:
        return SubproblemResult(Status.FEASIBLE, warm_start.copy(), -np.inf, 0)

    start = warm_start.copy()
    if not prob.q_free:
        start.q = prob.fixed_q.copy()
    start.p = np.maximum(start.p, P_FLOOR)
    start.b = np.maximum(start.b, B_FLOOR)
    start.u = np.maximum(start.u, spec.scenario.params.u_floor)

    if opt.mode == "first_feasible":
        z0 = prob.pack(start, 0.0)
        g0 = float(prob.slacked_values(z0).max())
        if g0 <= -opt.sigma_margin and np.all(prob.hard_values(z0) <= 0):
            return SubproblemResult(Status.FEASIBLE, start, g0, 0, [g0])

    pt = _interior_start(prob, start, spec)
    z = prob.pack(pt, 0.0)
    g = prob.slacked_values(z)
    if not np.all(np.isfinite(g)):
        raise SolverFailure("non-finite constraint values at the warm start")
    z[prob.isig] = float(g.max()) + 1.0

    best_sigma = float(g.max())
    best_z = z.copy()
    history = [best_sigma]
    iters = 0
    mu = opt.mu0
    status = None
    for _stage in range(opt.stages):
        while True:
            if iters >= opt.max_inner_iters:
                status = Status.MAX_ITERS
                break
            grad, Hm = _newton_system(prob, z, mu)
            if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(Hm))):
                raise SolverFailure("non-finite barrier derivatives")
            Hm[np.diag_indices_from(Hm)] += 1e-14 * np.abs(np.diag(Hm)).max()
            try:
                dz = -np.linalg.solve(Hm, grad)
            except np.linalg.LinAlgError:
                dz = -np.linalg.lstsq(Hm, grad, rcond=None)[0]
            dec = -float(grad @ dz)
            if dec / 2 <= opt.newton_tol:
                break
            f0 = _barrier(prob, z, mu)
            if not np.isfinite(f0):
                raise SolverFailure("barrier left its domain")
            step = 1.0
            while step > 1e-12:
                zn = z + step * dz
                fn = _barrier(prob, zn, mu)
                if np.isfinite(fn) and fn <= f0 - 0.25 * step * dec:
                    break
                step *= 0.5
            else:
                break
            z = zn
            iters += 1
            sig = float(prob.slacked_values(z).max())
            if sig < best_sigma:
                best_sigma, best_z = sig, z.copy()
            history.append(best_sigma)
            if opt.mode == "first_feasible" and best_sigma <= -opt.sigma_margin:
                status = Status.FEASIBLE
                break
        if status is not None:
            break
        mu *= opt.mu_factor

    point = prob.unpack(best_z)
    if status is None or status is Status.FEASIBLE:
        status = Status.FEASIBLE if best_sigma <= -opt.sigma_margin else Status.INFEASIBLE
    elif best_sigma <= -opt.sigma_margin:
        status = Status.FEASIBLE
    return SubproblemResult(status, point, best_sigma, iters, history)


def clamp_u_to_bound(point: Point, scenario) -> Point:
    """Set every u_k to its lower bound at the point's UAV position."""
    out = point.copy()
    out.u = u_bound(out.q, scenario)
    return out
