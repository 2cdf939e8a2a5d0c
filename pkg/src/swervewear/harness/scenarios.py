"""Reference trajectories and the scenarios built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import GRAVITY, Limits, TireParams, VehicleParams, VehicleState

KMH = 1.0 / 3.6

# Serpentine used for the winding-road case: y = A (1 - cos(2 pi x / wavelength)).
CURVE_AMPLITUDE = 4.0
CURVE_WAVELENGTH = 80.0
# Fraction of each hard limit the curve may demand.
FEASIBILITY_MARGIN = 0.7


class TrajectoryError(ValueError):
    """The requested reference cannot be followed within the vehicle limits."""


@dataclass(frozen=True)
class Trajectory:
    poses: np.ndarray  # (k + 1, 3) with unwrapped headings
    T: float

    def __post_init__(self):
        poses = np.asarray(self.poses, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "poses", poses)
        if not self.T > 0:
            raise ValueError("trajectory period must be positive")

    @property
    def times(self) -> np.ndarray:
        return self.T * np.arange(len(self.poses))

    def __len__(self):
        return len(self.poses)


@dataclass(frozen=True)
class Scenario:
    name: str
    reference: Trajectory
    initial_state: VehicleState
    mass: float | None = None

    @property
    def steps(self) -> int:
        return max(len(self.reference) - 1, 0)

    @property
    def duration(self) -> float:
        return self.steps * self.reference.T


def _curve_geometry(n: int = 20001, amplitude=CURVE_AMPLITUDE, wavelength=CURVE_WAVELENGTH,
                    length: float = 1.0):
    k = 2 * math.pi / wavelength
    x = np.linspace(0.0, length, n)
    dy = amplitude * k * np.sin(k * x)
    ds = np.sqrt(1.0 + dy ** 2)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (ds[1:] + ds[:-1]) * np.diff(x))])
    return x, s


def curve_demands(speed: float, vehicle: VehicleParams, amplitude=CURVE_AMPLITUDE,
                  wavelength=CURVE_WAVELENGTH) -> dict:
    """Peak steering angle, steering rate and lateral acceleration the curve asks for."""
    k = 2 * math.pi / wavelength
    x = np.linspace(0.0, wavelength, 4001)
    d1 = amplitude * k * np.sin(k * x)
    d2 = amplitude * k * k * np.cos(k * x)
    d3 = -amplitude * k ** 3 * np.sin(k * x)
    g = 1.0 + d1 ** 2
    kappa = d2 / g ** 1.5
    # d(kappa)/ds
    dkappa = (d3 * g - 3.0 * d1 * d2 ** 2) / g ** 3
    reach = max(abs(w) for w in vehicle.wheel_x)
    return dict(
        steer_angle=float(np.max(np.arctan(np.abs(kappa) * reach))),
        steer_rate=float(np.max(reach * np.abs(dkappa) * speed)),
        lateral_accel=float(np.max(np.abs(kappa)) * speed ** 2),
    )


def check_curve_feasible(speed: float, vehicle: VehicleParams, tire: TireParams, limits: Limits,
                         **geometry) -> dict:
    demands = curve_demands(speed, vehicle, **geometry)
    grip = tire.lateral.D * vehicle.wheel_count / vehicle.mass
    bounds = dict(
        steer_angle=FEASIBILITY_MARGIN * min(abs(a) for a in limits.steer_angle),
        steer_rate=FEASIBILITY_MARGIN * min(abs(r) for r in limits.steer_rate),
        lateral_accel=FEASIBILITY_MARGIN * grip,
        speed=limits.drive_rate[1] * tire.wheel_radius,
    )
    demands["speed"] = speed
    for key, bound in bounds.items():
        if demands[key] > bound:
            raise TrajectoryError(
                f"curve at {speed / KMH:.1f} km/h needs {key}={demands[key]:.4g}, limit allows {bound:.4g}")
    return demands


def curve_reference(speed: float, duration: float, T: float, amplitude=CURVE_AMPLITUDE,
                    wavelength=CURVE_WAVELENGTH) -> Trajectory:
    steps = int(round(duration / T))
    s_target = speed * T * np.arange(steps + 1)
    length = 1.05 * (s_target[-1] if steps else 0.0) + wavelength
    x_grid, s_grid = _curve_geometry(amplitude=amplitude, wavelength=wavelength, length=length,
                                     n=max(20001, int(length * 50)))
    k = 2 * math.pi / wavelength
    x = np.interp(s_target, s_grid, x_grid)
    y = amplitude * (1.0 - np.cos(k * x))
    heading = np.arctan(amplitude * k * np.sin(k * x))
    return Trajectory(np.column_stack([x, y, heading]), T)


def line_reference(speed: float, duration: float, T: float, heading: float = 0.0) -> Trajectory:
    steps = int(round(duration / T))
    s = speed * T * np.arange(steps + 1)
    return Trajectory(np.column_stack([s * math.cos(heading), s * math.sin(heading),
                                       np.full(steps + 1, heading)]), T)


def load_reference(path, T: float) -> Trajectory:
    """Read a CSV of ``x,y,phi`` rows (header optional) sampled at period T."""
    rows = np.genfromtxt(Path(path), delimiter=",", names=None, dtype=float, comments="#")
    rows = rows[~np.isnan(rows).any(axis=1)] if rows.ndim == 2 else rows.reshape(-1, 3)
    if rows.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns x,y,phi")
    return Trajectory(rows, T)


SCENARIOS = ("curve", "offset_line")
DEFAULT_DURATION = {"curve": 10.0, "offset_line": 12.0}
DEFAULT_SPEED_KMH = {"curve": 35.0, "offset_line": 10.0}
# The load sweep drives the same curve a little slower.
SWEEP_SPEED_KMH = 30.0
OFFSET_HEADING = math.pi / 3


def generate_reference(kind: str, speed_kmh: float, duration: float, T: float = 0.01,
                       path=None) -> Trajectory:
    if not speed_kmh > 0:
        raise ValueError("speed must be positive")
    speed = speed_kmh * KMH
    if kind == "curve":
        return curve_reference(speed, duration, T)
    if kind == "offset_line":
        return line_reference(speed, duration, T)
    if kind == "custom":
        if path is None:
            raise ValueError("custom reference needs a file path")
        return load_reference(path, T)
    raise ValueError(f"unknown reference kind {kind!r}; choose from curve, offset_line, custom")


def make_scenario(kind: str, vehicle: VehicleParams, tire: TireParams, limits: Limits,
                  speed_kmh: float | None = None, duration: float | None = None, T: float = 0.01,
                  mass: float | None = None, path=None) -> Scenario:
    """Build a named scenario; the vehicle starts rolling at the reference speed."""
    speed_kmh = DEFAULT_SPEED_KMH.get(kind, 10.0) if speed_kmh is None else speed_kmh
    duration = DEFAULT_DURATION.get(kind, 10.0) if duration is None else duration
    if kind == "curve":
        check_curve_feasible(speed_kmh * KMH, vehicle, tire, limits)
    reference = generate_reference(kind, speed_kmh, duration, T, path)
    speed = speed_kmh * KMH
    heading = float(reference.poses[0, 2])
    if kind == "offset_line":
        heading += OFFSET_HEADING
    initial = VehicleState.rolling(vehicle.axle_count, speed, heading=heading,
                                   position=tuple(reference.poses[0, :2]),
                                   wheel_radius=tire.wheel_radius)
    return Scenario(kind, reference, initial, mass)


def uniform_load(mass: float, axle_count: int) -> float:
    return mass * GRAVITY / (2 * axle_count)
