"""Wheel slip kinematics, Magic Formula forces and tire wear power."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MagicFormula, TireParams, VehicleParams, VehicleState, rotation2d

# Below this wheel speed (m/s) the slip definitions are singular.
V_EPS = 0.05


@dataclass(frozen=True)
class WheelKinematics:
    v_body: tuple[float, float]
    v_wheel: tuple[float, float]
    slip_angle: float
    slip_ratio: float
    low_speed: bool = False


@dataclass(frozen=True)
class WheelForces:
    fx_wheel: float
    fy_wheel: float


@dataclass(frozen=True)
class WearPower:
    p_slip_ratio: float = 0.0
    p_slip_angle: float = 0.0
    p_steer: float = 0.0

    def __add__(self, other: "WearPower") -> "WearPower":
        return WearPower(*(np.asarray(self.as_tuple()) + np.asarray(other.as_tuple())))

    def __mul__(self, k: float) -> "WearPower":
        return WearPower(*(k * np.asarray(self.as_tuple())))

    __rmul__ = __mul__

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_slip_ratio, self.p_slip_angle, self.p_steer)

    @property
    def total(self) -> float:
        return self.p_slip_ratio + self.p_slip_angle + self.p_steer


def _check_finite(*values):
    if not all(np.all(np.isfinite(v)) for v in values):
        raise ValueError("non-finite input")


def wheel_velocity_body(body_velocity, wheel_pos) -> tuple[float, float]:
    """Velocity of the wheel contact point in the body frame."""
    vx, vy, yaw_rate = body_velocity
    x_w, y_w = wheel_pos
    _check_finite(vx, vy, yaw_rate, x_w, y_w)
    return (vx - yaw_rate * y_w, vy + yaw_rate * x_w)


def to_wheel_frame(steer_angle: float, v_body) -> tuple[float, float]:
    vx, vy = rotation2d(-steer_angle) @ np.asarray(v_body, dtype=float)
    return (float(vx), float(vy))


def slip_angle(steer_angle: float, v_body) -> float:
    """Angle between the wheel heading and its ground velocity.

    Equals ``steer_angle - atan2(vy, vx)`` while the wheel rolls forward. For a
    wheel rolling backwards the angle is measured against the reversed
    velocity, so the lateral force keeps opposing the lateral sliding.
    """
    if math.hypot(*v_body) <= V_EPS:
        return 0.0
    vx_w, vy_w = to_wheel_frame(steer_angle, v_body)
    return math.atan2(-vy_w, abs(vx_w))


def slip_ratio(drive_rate: float, wheel_radius: float, v_wheel_long: float) -> float:
    denom = max(abs(v_wheel_long), V_EPS)
    return (drive_rate * wheel_radius - v_wheel_long) / denom


def magic_formula(xi, coeffs: MagicFormula):
    _check_finite(xi)
    return coeffs(xi)


def wheel_kinematics(state: VehicleState, wheel_index, drive_rate: float,
                     vehicle: VehicleParams, tire: TireParams) -> WheelKinematics:
    i, j = wheel_index
    if not (0 <= i < vehicle.axle_count and 0 <= j < 2):
        raise IndexError(f"no wheel {wheel_index} on a {vehicle.axle_count}-axle vehicle")
    v_b = wheel_velocity_body(state.body_velocity, (vehicle.wheel_x[i], vehicle.wheel_y[j]))
    delta = float(state.steer_angles[i, j])
    v_w = to_wheel_frame(delta, v_b)
    low_speed = math.hypot(*v_b) <= V_EPS or abs(v_w[0]) <= V_EPS
    return WheelKinematics(
        v_body=v_b,
        v_wheel=v_w,
        slip_angle=slip_angle(delta, v_b),
        slip_ratio=slip_ratio(drive_rate, tire.wheel_radius, v_w[0]),
        low_speed=low_speed,
    )


def forces_from_slip(kin: WheelKinematics, tire: TireParams) -> WheelForces:
    return WheelForces(
        fx_wheel=float(tire.longitudinal(kin.slip_ratio)),
        fy_wheel=float(tire.lateral(kin.slip_angle)),
    )


def wheel_forces(state: VehicleState, wheel_index, drive_rate: float,
                 vehicle: VehicleParams, tire: TireParams) -> WheelForces:
    """Wheel-frame tire forces: longitudinal from slip ratio, lateral from slip angle."""
    return forces_from_slip(wheel_kinematics(state, wheel_index, drive_rate, vehicle, tire), tire)


def wear_power(kinematics: WheelKinematics, forces: WheelForces, drive_rate: float,
               steer_rate: float, tire: TireParams) -> WearPower:
    slip_speed = drive_rate * tire.wheel_radius - kinematics.v_wheel[0]
    return WearPower(
        p_slip_ratio=abs(forces.fx_wheel * slip_speed),
        p_slip_angle=abs(forces.fy_wheel * kinematics.v_wheel[1]),
        p_steer=abs(tire.steer_loss_coeff * tire.vertical_load * steer_rate),
    )


def total_wear_power(per_wheel, wheel_count: int | None = None) -> WearPower:
    per_wheel = list(per_wheel)
    if wheel_count is not None and len(per_wheel) != wheel_count:
        raise ValueError(f"expected {wheel_count} wheels, got {len(per_wheel)}")
    if not per_wheel or len(per_wheel) % 2:
        raise ValueError(f"wheel list must have a positive even length, got {len(per_wheel)}")
    sums = np.sum([p.as_tuple() for p in per_wheel], axis=0)
    return WearPower(*(float(s) for s in sums))
