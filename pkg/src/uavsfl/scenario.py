"""Scenario configuration, unit helpers, seeded generation and a feasibility pre-check."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import physics


class ConfigError(ValueError):
    """Raised for malformed or out-of-range configuration values."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


def dbm_to_watts(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w) + 30.0


@dataclass(frozen=True)
class SystemParams:
    bandwidth_hz: float = 20e6
    frame_s: float = 8.0
    altitude_m: float = 20.0
    placement_radius_m: float = 50.0
    harvest_efficiency: float = 0.9
    ref_gain_linear: float = 0.1
    pathloss_exponent: float = 2.0
    noise_psd_w_per_hz: float = dbm_to_watts(-110.0)
    payload_bits: float = 100e3
    uav_pmax_w: float = dbm_to_watts(36.0)
    conv_eps: float = 1e-3
    max_outer_iters: int = 100

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f.name, f"must be a finite positive number, got {v!r}")
        if self.harvest_efficiency > 1:
            raise ConfigError("harvest_efficiency", "must be <= 1")
        if self.pathloss_exponent < 2:
            raise ConfigError("pathloss_exponent", "must be >= 2 (placement constraint convexity)")

    @property
    def beta0(self) -> float:
        """Harvest constant eta0 * T * beta0hat."""
        return self.harvest_efficiency * self.frame_s * self.ref_gain_linear

    @property
    def g0(self) -> float:
        """Rate constant beta0hat / n0."""
        return self.ref_gain_linear / self.noise_psd_w_per_hz

    @property
    def u_floor(self) -> float:
        return self.altitude_m ** self.pathloss_exponent


@dataclass(frozen=True)
class UserProfile:
    position: tuple[float, float]
    data_bits: float
    cycles_per_bit: float
    chip_coeff: float
    local_iters: int
    cpu_min_hz: float
    cpu_max_hz: float
    pmax_w: float

    def __post_init__(self):
        for name in ("data_bits", "cycles_per_bit", "chip_coeff", "cpu_min_hz", "cpu_max_hz", "pmax_w"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(name, f"must be a finite positive number, got {v!r}")
        if self.cpu_min_hz > self.cpu_max_hz:
            raise ConfigError("cpu_min_hz", "must not exceed cpu_max_hz")
        if int(self.local_iters) != self.local_iters or self.local_iters < 1:
            raise ConfigError("local_iters", "must be an integer >= 1")

    @property
    def workload(self) -> float:
        """Cycles for one local iteration, C_k * D_k."""
        return self.cycles_per_bit * self.data_bits


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    users: tuple[UserProfile, ...]
    seed: int = 0

    @property
    def K(self) -> int:
        return len(self.users)

    # vectorised views, rebuilt on access (scenarios are small)
    @property
    def positions(self) -> np.ndarray:
        return np.array([u.position for u in self.users], dtype=float).reshape(-1, 2)

    def _col(self, name: str) -> np.ndarray:
        return np.array([getattr(u, name) for u in self.users], dtype=float)

    @property
    def data_bits(self) -> np.ndarray:
        return self._col("data_bits")

    @property
    def workload(self) -> np.ndarray:
        return self._col("data_bits") * self._col("cycles_per_bit")

    @property
    def chip_coeff(self) -> np.ndarray:
        return self._col("chip_coeff")

    @property
    def local_iters(self) -> np.ndarray:
        return self._col("local_iters")

    @property
    def cpu_min(self) -> np.ndarray:
        return self._col("cpu_min_hz")

    @property
    def cpu_max(self) -> np.ndarray:
        return self._col("cpu_max_hz")

    @property
    def pmax(self) -> np.ndarray:
        return self._col("pmax_w")

    def centroid(self) -> np.ndarray:
        """User centroid projected into the UAV placement disc."""
        if self.K == 0:
            return np.zeros(2)
        c = self.positions.mean(axis=0)
        r = float(np.hypot(*c))
        C = self.params.placement_radius_m
        return c if r <= C else c * (C / r)

    def with_params(self, **changes) -> "Scenario":
        return replace(self, params=replace(self.params, **changes))

    def with_users(self, **changes) -> "Scenario":
        return replace(self, users=tuple(replace(u, **changes) for u in self.users))

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "system": asdict(self.params),
            "users": [asdict(u) | {"position": list(u.position)} for u in self.users],
        }


@dataclass(frozen=True)
class GenerationConfig:
    """Recipe for a random scenario: K users uniform on a disc, per-user ranges."""

    num_users: int = 25
    user_disc_radius_m: float = 50.0
    data_bits_range: tuple[float, float] = (5e6, 10e6)
    cycles_per_bit_range: tuple[float, float] = (10.0, 20.0)
    chip_coeff: float = 1e-28
    local_iters: int = 4
    cpu_min_hz: float = 0.1e9
    cpu_max_hz: float = 1e9
    user_pmax_w: float = dbm_to_watts(10.0)
    seed: int = 0
    system: SystemParams = field(default_factory=SystemParams)

    def __post_init__(self):
        if int(self.num_users) != self.num_users or self.num_users < 0:
            raise ConfigError("num_users", "must be a nonnegative integer")
        if not self.user_disc_radius_m > 0:
            raise ConfigError("user_disc_radius_m", "must be positive")
        for name in ("data_bits_range", "cycles_per_bit_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi and math.isfinite(hi)):
                raise ConfigError(name, f"need 0 < lo <= hi, got {(lo, hi)}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed", "must be an unsigned integer")
        if int(self.local_iters) != self.local_iters or self.local_iters < 1:
            raise ConfigError("local_iters", "must be a positive integer")
        for name in ("chip_coeff", "cpu_min_hz", "cpu_max_hz", "user_pmax_w"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(name, f"must be a finite positive number, got {v!r}")
        if self.cpu_min_hz > self.cpu_max_hz:
            raise ConfigError("cpu_min_hz", "must not exceed cpu_max_hz")


def generate_scenario(cfg: GenerationConfig) -> Scenario:
    """Draw a scenario; a pure function of ``cfg``."""
    rng = np.random.default_rng(cfg.seed)
    K = cfg.num_users
    # r = R sqrt(U) gives uniform density on the disc
    r = cfg.user_disc_radius_m * np.sqrt(rng.random(K))
    theta = 2.0 * np.pi * rng.random(K)
    xy = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    D = rng.uniform(*cfg.data_bits_range, size=K)
    C = rng.uniform(*cfg.cycles_per_bit_range, size=K)
    users = tuple(
        UserProfile(
            position=(float(xy[k, 0]), float(xy[k, 1])),
            data_bits=float(D[k]),
            cycles_per_bit=float(C[k]),
            chip_coeff=cfg.chip_coeff,
            local_iters=int(cfg.local_iters),
            cpu_min_hz=cfg.cpu_min_hz,
            cpu_max_hz=cfg.cpu_max_hz,
            pmax_w=cfg.user_pmax_w,
        )
        for k in range(K)
    )
    return Scenario(params=cfg.system, users=users, seed=int(cfg.seed))


# ---------------------------------------------------------------------------
# JSON config ingestion

_SYSTEM_KEYS = {f.name for f in fields(SystemParams)}
_GEN_KEYS = {f.name for f in fields(GenerationConfig)} - {"system"}


def config_from_dict(d: dict[str, Any]) -> GenerationConfig:
    """Build a GenerationConfig from the JSON layout documented in the README."""
    if not isinstance(d, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(d) - _GEN_KEYS - {"system"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    sys_d = d.get("system", {})
    if not isinstance(sys_d, dict):
        raise ConfigError("system", "must be an object")
    bad = set(sys_d) - _SYSTEM_KEYS
    if bad:
        raise ConfigError(f"system.{sorted(bad)[0]}", "unknown field")
    sys_kw = {}
    for k, v in sys_d.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"system.{k}", f"expected a number, got {v!r}")
        sys_kw[k] = v
    try:
        system = SystemParams(**sys_kw)
    except ConfigError as e:
        raise ConfigError(f"system.{e.field_name}", str(e).split(": ", 1)[1]) from None
    kw: dict[str, Any] = {}
    for k, v in d.items():
        if k == "system":
            continue
        if k.endswith("_range"):
            if not (isinstance(v, (list, tuple)) and len(v) == 2
                    and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
                raise ConfigError(k, "expected a [lo, hi] pair of numbers")
            v = (float(v[0]), float(v[1]))
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(k, f"expected a number, got {v!r}")
        kw[k] = v
    return GenerationConfig(system=system, **kw)


def load_config(path: str | Path) -> GenerationConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("<json>", f"line {e.lineno} col {e.colno}: {e.msg}") from None
    return config_from_dict(d)


def config_to_dict(cfg: GenerationConfig) -> dict[str, Any]:
    d = asdict(cfg)
    d["data_bits_range"] = list(cfg.data_bits_range)
    d["cycles_per_bit_range"] = list(cfg.cycles_per_bit_range)
    return d


# ---------------------------------------------------------------------------
# pre-check

@dataclass(frozen=True)
class UserCheck:
    index: int
    demand_j: float
    harvestable_j: float
    margin: float  # harvestable / demand
    schedulable: bool

    @property
    def passed(self) -> bool:
        return self.schedulable and self.margin >= 1.0


@dataclass(frozen=True)
class PrecheckReport:
    users: tuple[UserCheck, ...]

    @property
    def passed(self) -> bool:
        return all(u.passed for u in self.users)

    @property
    def failures(self) -> list[UserCheck]:
        return [u for u in self.users if not u.passed]

    def summary(self) -> str:
        if not self.users:
            return "PASS (no users)"
        lines = []
        for u in self.users:
            flag = "PASS" if u.passed else "FAIL"
            extra = "" if u.schedulable else " unschedulable"
            lines.append(f"user {u.index:3d} {flag} demand={u.demand_j:.4e} J "
                         f"harvest={u.harvestable_j:.4e} J margin={u.margin:.3f}{extra}")
        lines.append("overall " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def precheck_feasibility(s: Scenario) -> PrecheckReport:
    """Compare each user's cheapest energy demand with what it can harvest.

    Demand uses the upload time needed at full user power on an equal bandwidth
    share with the UAV above the user centroid; the frequency is the slowest one
    meeting the frame. Harvest uses the full UAV power at the same position.
    """
    if s.K == 0:
        return PrecheckReport(users=())
    prm = s.params
    q = s.centroid()
    d = physics.distance(q, s.positions, prm.altitude_m)
    g = physics.channel_gain(d, prm)
    b = np.full(s.K, prm.bandwidth_hz / s.K)
    R = physics.rate(b, s.pmax, g, prm.noise_psd_w_per_hz)
    t_nom = prm.payload_bits / R
    N, W = s.local_iters, s.workload
    slack = prm.frame_s - t_nom
    with np.errstate(divide="ignore"):
        f_need = np.where(slack > 0, N * W / np.maximum(slack, 1e-300), np.inf)
    f = np.maximum(s.cpu_min, f_need)
    schedulable = (N * W / s.cpu_max < prm.frame_s) & (f <= s.cpu_max)
    f = np.minimum(f, s.cpu_max)
    demand = N * physics.comp_energy(s.chip_coeff, W, f) + t_nom * s.pmax
    harvest = physics.harvested_energy(prm.uav_pmax_w, g, prm)
    checks = tuple(
        UserCheck(k, float(demand[k]), float(harvest[k]), float(harvest[k] / demand[k]), bool(schedulable[k]))
        for k in range(s.K)
    )
    return PrecheckReport(users=checks)


def default_config(seed: int = 0, **overrides) -> GenerationConfig:
    """Simulation defaults; ``overrides`` may name SystemParams or GenerationConfig fields."""
    sys_over = {k: v for k, v in overrides.items() if k in _SYSTEM_KEYS}
    gen_over = {k: v for k, v in overrides.items() if k not in _SYSTEM_KEYS}
    return GenerationConfig(seed=seed, system=SystemParams(**sys_over), **gen_over)

