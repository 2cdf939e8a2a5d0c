"""TOML configuration: one document holds the vehicle, tire, limits and controller settings.

Schema (every section except ``vehicle`` is optional)::

    [vehicle]
    mass_kg = 12000.0
    yaw_inertia = 80000.0
    wheel_x = [3.0, -3.0]        # one entry per axle, m
    wheel_y = [1.0, -1.0]        # left, right, m

    [tire]
    B = [10.0, 8.5]              # scalar, or [longitudinal, lateral]
    C = [1.9, 1.4]
    D = [23544.0, 22072.5]       # N; default 0.8 / 0.75 of the vertical load
    E = [0.97, -1.0]
    radius = 0.5
    k_t = 0.01
    vertical_load = 29430.0      # N; default mass * g / wheel count

    [limits]
    steer_rate = [-1.0, 1.0]     # rad/s
    drive_rate = [0.0, 30.0]     # rad/s, lower bound must be 0
    steer_angle = [-3.14159, 3.14159]

    [mpc]   prediction_horizon, control_horizon, Q, L, dt
    [sa]    initial_temp ("auto" or a number), cooling_rate, iterations,
            moves_per_temp, perturb_scale, subset_fraction, rng_seed
    [sim]   dt, substeps, actuator_lag
    [baseline]  k_p, k_phi, k_v
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .baseline import KinematicGains
from .core import (DEFAULT_LATERAL, DEFAULT_LONGITUDINAL, GRAVITY, ConfigError, Limits,
                   MagicFormula, TireParams, VehicleParams)
from .dynamics import PlantSettings
from .mpc import MpcSettings, SaSettings


@dataclass(frozen=True)
class Config:
    vehicle: VehicleParams
    tire: TireParams
    limits: Limits = field(default_factory=Limits)
    mpc: MpcSettings = field(default_factory=MpcSettings)
    sa: SaSettings = field(default_factory=SaSettings)
    plant: PlantSettings = field(default_factory=PlantSettings)
    baseline: KinematicGains = field(default_factory=KinematicGains)

    def with_mass(self, mass: float) -> "Config":
        """Change the gross mass; per-wheel load and tire peak factors follow."""
        vehicle = replace(self.vehicle, mass=float(mass))
        return replace(self, vehicle=vehicle, tire=self.tire.with_load(vehicle.uniform_load()))

    def with_seed(self, seed: int) -> "Config":
        return replace(self, sa=replace(self.sa, rng_seed=int(seed)))


def default_config() -> Config:
    vehicle = VehicleParams(mass=12000.0, yaw_inertia=80000.0, wheel_x=(3.0, -3.0), wheel_y=(1.0, -1.0))
    return Config(vehicle=vehicle, tire=TireParams.default_for_load(vehicle.uniform_load()))


def _require(section: dict, key: str, prefix: str):
    if key not in section:
        raise ConfigError(f"missing required key {prefix}.{key}")
    return section[key]


def _split(value, name: str) -> tuple[float, float]:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"{name} must be a scalar or [longitudinal, lateral]")
        return float(value[0]), float(value[1])
    return float(value), float(value)


def _known(section: dict, allowed: set, prefix: str):
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) {', '.join(f'{prefix}.{k}' for k in sorted(extra))}")


def _build(cls, section: dict, prefix: str, rename: dict | None = None):
    rename = rename or {}
    names = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in section.items():
        target = rename.get(key, key)
        if target not in names:
            raise ConfigError(f"unknown key {prefix}.{key}")
        kwargs[target] = tuple(value) if isinstance(value, list) else value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def config_from_dict(data: dict) -> Config:
    _known(data, {"vehicle", "tire", "limits", "mpc", "sa", "sim", "baseline"}, "config")
    v = data.get("vehicle")
    if v is None:
        raise ConfigError("missing required section [vehicle]")
    _known(v, {"mass_kg", "yaw_inertia", "wheel_x", "wheel_y", "axle_count"}, "vehicle")
    wheel_x = list(_require(v, "wheel_x", "vehicle"))
    if "axle_count" in v and int(v["axle_count"]) != len(wheel_x):
        raise ConfigError(f"vehicle.wheel_x has {len(wheel_x)} entries but vehicle.axle_count is {v['axle_count']}")
    vehicle = VehicleParams(
        mass=float(_require(v, "mass_kg", "vehicle")),
        yaw_inertia=float(_require(v, "yaw_inertia", "vehicle")),
        wheel_x=tuple(wheel_x),
        wheel_y=tuple(v.get("wheel_y", (1.0, -1.0))),
    )

    t = data.get("tire", {})
    _known(t, {"B", "C", "D", "E", "radius", "k_t", "vertical_load"}, "tire")
    load = float(t.get("vertical_load", vehicle.mass * GRAVITY / vehicle.wheel_count))
    lon, lat = DEFAULT_LONGITUDINAL, DEFAULT_LATERAL
    B = _split(t.get("B", [lon["B"], lat["B"]]), "tire.B")
    C = _split(t.get("C", [lon["C"], lat["C"]]), "tire.C")
    D = _split(t.get("D", [lon["mu"] * load, lat["mu"] * load]), "tire.D")
    E = _split(t.get("E", [lon["E"], lat["E"]]), "tire.E")
    tire = TireParams(
        longitudinal=MagicFormula(B[0], C[0], D[0], E[0]),
        lateral=MagicFormula(B[1], C[1], D[1], E[1]),
        wheel_radius=float(t.get("radius", 0.5)),
        steer_loss_coeff=float(t.get("k_t", 0.01)),
        vertical_load=load,
    )

    limits = _build(Limits, data.get("limits", {}), "limits")
    m = dict(data.get("mpc", {}))
    mpc = _build(MpcSettings, m, "mpc", rename={"Q": "weights_Q", "L": "weights_L"})
    s = dict(data.get("sa", {}))
    if s.get("initial_temp") == "auto":
        s["initial_temp"] = None
    sa = _build(SaSettings, s, "sa")
    plant = _build(PlantSettings, data.get("sim", {}), "sim")
    gains = _build(KinematicGains, data.get("baseline", {}), "baseline")
    return Config(vehicle, tire, limits, mpc, sa, plant, gains)


def load_config(path) -> Config:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: Config) -> dict:
    lon, lat = cfg.tire.longitudinal, cfg.tire.lateral
    sa = {f.name: getattr(cfg.sa, f.name) for f in fields(cfg.sa)}
    sa["initial_temp"] = "auto" if cfg.sa.initial_temp is None else cfg.sa.initial_temp
    return {
        "vehicle": {"mass_kg": cfg.vehicle.mass, "yaw_inertia": cfg.vehicle.yaw_inertia,
                    "wheel_x": list(cfg.vehicle.wheel_x), "wheel_y": list(cfg.vehicle.wheel_y)},
        "tire": {"B": [lon.B, lat.B], "C": [lon.C, lat.C], "D": [lon.D, lat.D], "E": [lon.E, lat.E],
                 "radius": cfg.tire.wheel_radius, "k_t": cfg.tire.steer_loss_coeff,
                 "vertical_load": cfg.tire.vertical_load},
        "limits": {"steer_rate": list(cfg.limits.steer_rate), "drive_rate": list(cfg.limits.drive_rate),
                   "steer_angle": list(cfg.limits.steer_angle)},
        "mpc": {"prediction_horizon": cfg.mpc.prediction_horizon, "control_horizon": cfg.mpc.control_horizon,
                "Q": list(cfg.mpc.weights_Q), "L": list(cfg.mpc.weights_L), "dt": cfg.mpc.dt},
        "sa": sa,
        "sim": {f.name: getattr(cfg.plant, f.name) for f in fields(cfg.plant)},
        "baseline": {f.name: getattr(cfg.baseline, f.name) for f in fields(cfg.baseline)},
    }


def save_config(cfg: Config, path) -> None:
    Path(path).write_text(tomli_w.dumps(config_to_dict(cfg)))
