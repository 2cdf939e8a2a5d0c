"""Parameter and state types shared by the plant, the controllers and the harness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

GRAVITY = 9.81


class ConfigError(ValueError):
    """Raised when a configuration is missing a key or violates an invariant."""


def rotation2d(angle: float) -> np.ndarray:
    if not np.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle!r}")
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _pair(value, name: str) -> tuple[float, float]:
    lo, hi = (float(v) for v in value)
    if not lo < hi:
        raise ConfigError(f"{name}: lower bound {lo} must be below upper bound {hi}")
    return lo, hi


@dataclass(frozen=True)
class VehicleParams:
    mass: float
    yaw_inertia: float
    wheel_x: tuple[float, ...]
    wheel_y: tuple[float, float] = (1.0, -1.0)

    def __post_init__(self):
        object.__setattr__(self, "wheel_x", tuple(float(x) for x in self.wheel_x))
        object.__setattr__(self, "wheel_y", tuple(float(y) for y in self.wheel_y))
        if not self.mass > 0:
            raise ConfigError(f"vehicle.mass_kg must be positive, got {self.mass}")
        if not self.yaw_inertia > 0:
            raise ConfigError(f"vehicle.yaw_inertia must be positive, got {self.yaw_inertia}")
        if len(self.wheel_x) < 1:
            raise ConfigError("vehicle.wheel_x needs at least one axle")
        if len(self.wheel_y) != 2:
            raise ConfigError("vehicle.wheel_y must have exactly 2 entries")

    @property
    def axle_count(self) -> int:
        return len(self.wheel_x)

    @property
    def wheel_count(self) -> int:
        return 2 * len(self.wheel_x)

    def wheel_positions(self) -> np.ndarray:
        """Wheel positions in the body frame, shape (n, 2, 2) indexed [axle, side, xy]."""
        pos = np.empty((self.axle_count, 2, 2))
        for i, x in enumerate(self.wheel_x):
            for j, y in enumerate(self.wheel_y):
                pos[i, j] = (x, y)
        return pos

    def uniform_load(self) -> float:
        return self.mass * GRAVITY / self.wheel_count


@dataclass(frozen=True)
class MagicFormula:
    """Coefficients of D sin(C atan(Bx - E(Bx - atan(Bx))))."""

    B: float
    C: float
    D: float
    E: float

    def __post_init__(self):
        if not self.D > 0:
            raise ConfigError(f"tire.D must be positive, got {self.D}")

    def __call__(self, xi):
        bx = self.B * np.asarray(xi, dtype=float)
        return self.D * np.sin(self.C * np.arctan(bx - self.E * (bx - np.arctan(bx))))

    def as_array(self) -> np.ndarray:
        return np.array([self.B, self.C, self.D, self.E])


# Peak factors are expressed as friction ratios of the vertical load.
DEFAULT_LONGITUDINAL = dict(B=10.0, C=1.9, mu=0.8, E=0.97)
DEFAULT_LATERAL = dict(B=8.5, C=1.4, mu=0.75, E=-1.0)


@dataclass(frozen=True)
class TireParams:
    longitudinal: MagicFormula
    lateral: MagicFormula
    wheel_radius: float = 0.5
    steer_loss_coeff: float = 0.01
    vertical_load: float = 29430.0

    def __post_init__(self):
        if not self.wheel_radius > 0:
            raise ConfigError(f"tire.radius must be positive, got {self.wheel_radius}")
        if not self.vertical_load > 0:
            raise ConfigError(f"tire.vertical_load must be positive, got {self.vertical_load}")
        if self.steer_loss_coeff < 0:
            raise ConfigError(f"tire.k_t must be nonnegative, got {self.steer_loss_coeff}")

    @classmethod
    def default_for_load(cls, vertical_load: float, **kwargs) -> "TireParams":
        lon, lat = DEFAULT_LONGITUDINAL, DEFAULT_LATERAL
        return cls(
            longitudinal=MagicFormula(lon["B"], lon["C"], lon["mu"] * vertical_load, lon["E"]),
            lateral=MagicFormula(lat["B"], lat["C"], lat["mu"] * vertical_load, lat["E"]),
            vertical_load=vertical_load,
            **kwargs,
        )

    def with_load(self, vertical_load: float) -> "TireParams":
        """Change the vertical load, scaling both peak factors by the same ratio."""
        k = vertical_load / self.vertical_load
        return replace(
            self,
            longitudinal=replace(self.longitudinal, D=self.longitudinal.D * k),
            lateral=replace(self.lateral, D=self.lateral.D * k),
            vertical_load=vertical_load,
        )


@dataclass(frozen=True)
class Limits:
    steer_rate: tuple[float, float] = (-1.0, 1.0)
    drive_rate: tuple[float, float] = (0.0, 30.0)
    steer_angle: tuple[float, float] = (-math.pi, math.pi)

    def __post_init__(self):
        object.__setattr__(self, "steer_rate", _pair(self.steer_rate, "limits.steer_rate"))
        object.__setattr__(self, "drive_rate", _pair(self.drive_rate, "limits.drive_rate"))
        object.__setattr__(self, "steer_angle", _pair(self.steer_angle, "limits.steer_angle"))
        if self.drive_rate[0] != 0.0:
            raise ConfigError("limits.drive_rate lower bound must be 0")


def _matrix(value, shape, name) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class VehicleState:
    """Global pose, global velocity and per-wheel steering angles.

    ``drive_rates``/``steer_rates`` hold the actuator outputs and only evolve
    when the plant models actuator lag.
    """

    pose: np.ndarray
    velocity: np.ndarray
    steer_angles: np.ndarray
    drive_rates: np.ndarray = None
    steer_rates: np.ndarray = None

    def __post_init__(self):
        delta = np.array(self.steer_angles, dtype=float)
        if delta.ndim != 2 or delta.shape[1] != 2:
            raise ValueError(f"steer_angles must be (axle_count, 2), got {delta.shape}")
        object.__setattr__(self, "pose", _matrix(self.pose, (3,), "pose"))
        object.__setattr__(self, "velocity", _matrix(self.velocity, (3,), "velocity"))
        object.__setattr__(self, "steer_angles", _matrix(delta, delta.shape, "steer_angles"))
        for name in ("drive_rates", "steer_rates"):
            value = getattr(self, name)
            value = np.zeros(delta.shape) if value is None else value
            object.__setattr__(self, name, _matrix(value, delta.shape, name))

    @classmethod
    def at_rest(cls, axle_count: int, pose=(0.0, 0.0, 0.0)) -> "VehicleState":
        return cls(pose=pose, velocity=np.zeros(3), steer_angles=np.zeros((axle_count, 2)))

    @classmethod
    def rolling(cls, axle_count: int, speed: float, heading: float = 0.0, position=(0.0, 0.0),
                wheel_radius: float | None = None) -> "VehicleState":
        """Straight motion along the body x axis with wheels aligned."""
        vel = (speed * math.cos(heading), speed * math.sin(heading), 0.0)
        rates = None
        if wheel_radius is not None:
            rates = np.full((axle_count, 2), speed / wheel_radius)
        return cls(pose=(*position, heading), velocity=vel,
                   steer_angles=np.zeros((axle_count, 2)), drive_rates=rates)

    @property
    def body_velocity(self) -> np.ndarray:
        """(x_B dot, y_B dot, yaw rate) in the body frame."""
        vxy = rotation2d(-self.pose[2]) @ self.velocity[:2]
        return np.array([vxy[0], vxy[1], self.velocity[2]])

    def replace(self, **changes) -> "VehicleState":
        return replace(self, **changes)


@dataclass(frozen=True)
class ControlVector:
    drive_rates: np.ndarray
    steer_rates: np.ndarray = field(default=None)

    def __post_init__(self):
        drive = np.array(self.drive_rates, dtype=float)
        steer = np.zeros_like(drive) if self.steer_rates is None else self.steer_rates
        object.__setattr__(self, "drive_rates", _matrix(drive, drive.shape, "drive_rates"))
        object.__setattr__(self, "steer_rates", _matrix(steer, drive.shape, "steer_rates"))

    @classmethod
    def zeros(cls, axle_count: int) -> "ControlVector":
        return cls(np.zeros((axle_count, 2)), np.zeros((axle_count, 2)))

    def as_flat(self) -> np.ndarray:
        """Stacked [drive rates, steer rates], wheels in (axle, side) row-major order."""
        return np.concatenate([self.drive_rates.ravel(), self.steer_rates.ravel()])

    @classmethod
    def from_flat(cls, u, axle_count: int) -> "ControlVector":
        u = np.asarray(u, dtype=float)
        m = 2 * axle_count
        return cls(u[:m].reshape(axle_count, 2), u[m:2 * m].reshape(axle_count, 2))

    def clamped(self, limits: Limits) -> tuple["ControlVector", bool]:
        drive = np.clip(self.drive_rates, *limits.drive_rate)
        steer = np.clip(self.steer_rates, *limits.steer_rate)
        changed = not (np.array_equal(drive, self.drive_rates) and np.array_equal(steer, self.steer_rates))
        return ControlVector(drive, steer), changed
