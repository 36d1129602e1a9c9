"""Closed-form channel, harvesting, computing and rate models, plus constraint residuals."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .scenario import Scenario, SystemParams

LN2 = np.log(2.0)


def distance(q, q_k, H: float):
    """3-D distance from a UAV hovering at height ``H`` over ``q`` to ground point(s) ``q_k``."""
    d = np.asarray(q, dtype=float) - np.asarray(q_k, dtype=float)
    return np.sqrt(H * H + np.sum(d * d, axis=-1))


def channel_gain(d, params: "SystemParams"):
    # d0 = 1 m is folded into the reference gain
    return params.ref_gain_linear * np.asarray(d, dtype=float) ** (-params.pathloss_exponent)


def harvested_energy(P, g, params: "SystemParams"):
    return params.harvest_efficiency * params.frame_s * P * np.asarray(g, dtype=float)


def comp_time(workload, f):
    """Seconds for one local iteration; ``workload`` is C_k * D_k cycles."""
    return np.asarray(workload, dtype=float) / f


def comp_energy(chip_coeff, workload, f):
    """Joules for one local iteration."""
    return chip_coeff * np.asarray(workload, dtype=float) * np.asarray(f, dtype=float) ** 2


def rate(b, p, g, n0):
    """FDMA Shannon rate in bits/s; zero where ``b`` or ``p`` vanish."""
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = p * g / (b * n0)
        r = b * np.log1p(snr) / LN2
    return np.where((b > 0) & (p > 0), r, 0.0)


@dataclass
class Allocation:
    """Full decision vector of the placement problem with auxiliary u_k."""

    uav_power: float
    p: np.ndarray
    f: np.ndarray
    b: np.ndarray
    t: np.ndarray
    q: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.uav_power = float(self.uav_power)
        for name in ("p", "f", "b", "t", "q", "u"):
            setattr(self, name, np.array(getattr(self, name), dtype=float))

    def copy(self, **changes) -> "Allocation":
        a = replace(self, **changes)
        return Allocation(a.uav_power, a.p, a.f, a.b, a.t, a.q, a.u)

    def as_dict(self) -> dict:
        return {
            "uav_power_w": self.uav_power,
            "q_m": self.q.tolist(),
            "p_w": self.p.tolist(),
            "f_hz": self.f.tolist(),
            "b_hz": self.b.tolist(),
            "t_s": self.t.tolist(),
            "u": self.u.tolist(),
        }


@dataclass
class ConstraintResiduals:
    """Normalised residuals; every entry <= 0 means the constraint holds."""

    rate: np.ndarray
    energy: np.ndarray
    time: np.ndarray
    bandwidth: float
    uav_power: float
    user_power: np.ndarray
    cpu_bounds: np.ndarray
    placement: float
    max_violation: float = field(init=False)

    def __post_init__(self):
        parts = [np.atleast_1d(x) for x in
                 (self.rate, self.energy, self.time, self.bandwidth, self.uav_power,
                  self.user_power, self.cpu_bounds, self.placement)]
        allv = np.concatenate(parts)
        self.max_violation = float(allv.max()) if allv.size else -np.inf

    def worst(self) -> str:
        """Name of the constraint group holding ``max_violation``."""
        best, name = -np.inf, ""
        for n in ("rate", "energy", "time", "bandwidth", "uav_power", "user_power", "cpu_bounds", "placement"):
            v = np.atleast_1d(getattr(self, n))
            if v.size and v.max() > best:
                best, name = float(v.max()), n
        return name


def energy_demand(s: "Scenario", f, t, p):
    """Energy spent in a round: N_k local iterations plus the upload."""
    return s.local_iters * comp_energy(s.chip_coeff, s.workload, f) + np.asarray(t) * np.asarray(p)


def energy_demand_one(s: "Scenario", k: int, f: float, t: float, p: float) -> float:
    return float(s.local_iters[k] * s.chip_coeff[k] * s.workload[k] * f * f + t * p)


def residuals(a: Allocation, s: "Scenario") -> ConstraintResiduals:
    """Evaluate the original (non-surrogate) constraint system at ``a``."""
    prm = s.params
    d = distance(a.q, s.positions, prm.altitude_m)
    g = channel_gain(d, prm)

    R = rate(a.b, a.p, g, prm.noise_psd_w_per_hz)
    r_rate = (prm.payload_bits - a.t * R) / prm.payload_bits

    used = energy_demand(s, a.f, a.t, a.p)
    harvest = harvested_energy(a.uav_power, g, prm)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_energy = np.where(harvest > 0, (used - harvest) / harvest,
                            np.where(used > 0, np.inf, 0.0))

    with np.errstate(divide="ignore"):
        t_cp = s.local_iters * comp_time(s.workload, a.f)
    r_time = (t_cp + a.t - prm.frame_s) / prm.frame_s

    r_bw = (float(np.sum(a.b)) - prm.bandwidth_hz) / prm.bandwidth_hz
    Pm = prm.uav_pmax_w
    r_uav = max((a.uav_power - Pm) / Pm, -a.uav_power / Pm)
    pm = s.pmax
    r_user = np.maximum((a.p - pm) / pm, -a.p / pm)
    r_cpu = np.maximum((s.cpu_min - a.f) / s.cpu_min, (a.f - s.cpu_max) / s.cpu_max)
    C2 = prm.placement_radius_m ** 2
    r_place = (float(a.q @ a.q) - C2) / C2
    return ConstraintResiduals(r_rate, r_energy, r_time, r_bw, r_uav, r_user, r_cpu, r_place)


def u_bound(q, s: "Scenario"):
    """Lower bound (H^2 + |q - q_k|^2)^(alpha/2) of the auxiliary variables."""
    prm = s.params
    return distance(q, s.positions, prm.altitude_m) ** prm.pathloss_exponent
