"""Kinematic steering-center baseline controller.

Every wheel is pointed along the velocity its contact point would have under a
rigid-body twist, so all wheel axles meet at the instantaneous center of
rotation and no slip is commanded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, ControlVector, Limits, TireParams, VehicleParams, VehicleState, rotation2d


@dataclass(frozen=True)
class BodyTwist:
    vx: float
    vy: float
    omega: float

    def __post_init__(self):
        if not all(np.isfinite((self.vx, self.vy, self.omega))):
            raise ValueError(f"twist must be finite, got {self}")

    def is_zero(self) -> bool:
        return self.vx == 0.0 and self.vy == 0.0 and self.omega == 0.0


@dataclass(frozen=True)
class KinematicGains:
    k_p: float = 1.0
    k_phi: float = 2.0
    k_v: float = 0.0

    def __post_init__(self):
        if self.k_p < 0 or self.k_phi < 0 or self.k_v < 0:
            raise ConfigError("baseline gains must be nonnegative")


def _pick_angle(target: float, previous: float, limits: Limits, allow_reverse: bool):
    """Choose among target + k*pi the reachable angle closest to ``previous``.

    Odd k reverse the wheel, which needs a negative drive-rate bound.
    Returns ``(angle, direction)``.
    """
    lo, hi = limits.steer_angle
    best = None
    for k in range(-3, 4):
        direction = -1.0 if k % 2 else 1.0
        if direction < 0 and not allow_reverse:
            continue
        angle = target + k * math.pi
        if lo <= angle <= hi and (best is None or abs(angle - previous) < abs(best[0] - previous)):
            best = (angle, direction)
    if best is None:
        best = (min(max(target, lo), hi), 1.0)
    return best


def inverse_kinematics(twist: BodyTwist, vehicle: VehicleParams, tire: TireParams,
                       limits: Limits | None = None, previous=None):
    """Steering angles and wheel spin rates realising ``twist`` without slip.

    Returns two (n, 2) arrays: steer angles (rad) and drive rates (rad/s).
    A zero twist keeps the previous angles and stops the wheels.
    """
    limits = limits or Limits()
    n = vehicle.axle_count
    previous = np.zeros((n, 2)) if previous is None else np.asarray(previous, dtype=float)
    if twist.is_zero():
        return previous.copy(), np.zeros((n, 2))
    allow_reverse = limits.drive_rate[0] < 0
    delta = np.empty((n, 2))
    rate = np.empty((n, 2))
    for i, x in enumerate(vehicle.wheel_x):
        for j, y in enumerate(vehicle.wheel_y):
            ux = twist.vx - twist.omega * y
            uy = twist.vy + twist.omega * x
            speed = math.hypot(ux, uy)
            if speed == 0.0:
                # wheel sits on the rotation center
                delta[i, j], rate[i, j] = previous[i, j], 0.0
                continue
            angle, direction = _pick_angle(math.atan2(uy, ux), previous[i, j], limits, allow_reverse)
            delta[i, j] = angle
            rate[i, j] = direction * speed / tire.wheel_radius
    return delta, rate


def icr(twist: BodyTwist) -> np.ndarray | None:
    """Instantaneous center of rotation in the body frame, None for pure translation."""
    if twist.omega == 0.0:
        return None
    return np.array([-twist.vy / twist.omega, twist.vx / twist.omega])


def desired_twist(state: VehicleState, reference_pose, gains: KinematicGains,
                  reference_velocity=None) -> BodyTwist:
    """Proportional pose feedback expressed as a body-frame twist."""
    error = np.asarray(reference_pose, dtype=float) - state.pose
    v_global = gains.k_p * error[:2]
    omega = gains.k_phi * error[2]
    if reference_velocity is not None and gains.k_v > 0:
        dv = np.asarray(reference_velocity, dtype=float) - state.velocity
        v_global = v_global + gains.k_v * dv[:2]
        omega += gains.k_v * dv[2]
    vx, vy = rotation2d(-state.pose[2]) @ v_global
    return BodyTwist(float(vx), float(vy), float(omega))


def _saturate(twist: BodyTwist, vehicle: VehicleParams, tire: TireParams, limits: Limits) -> BodyTwist:
    """Scale the twist so no wheel exceeds the drive-rate bound."""
    top = limits.drive_rate[1] * tire.wheel_radius
    peak = max(math.hypot(twist.vx - twist.omega * y, twist.vy + twist.omega * x)
               for x in vehicle.wheel_x for y in vehicle.wheel_y)
    if peak <= top:
        return twist
    k = top / peak
    return BodyTwist(twist.vx * k, twist.vy * k, twist.omega * k)


def kinematic_controller_step(state: VehicleState, reference_pose, gains: KinematicGains,
                              vehicle: VehicleParams, tire: TireParams, limits: Limits,
                              dt: float, reference_velocity=None) -> ControlVector:
    twist = _saturate(desired_twist(state, reference_pose, gains, reference_velocity), vehicle, tire, limits)
    target, drive = inverse_kinematics(twist, vehicle, tire, limits, previous=state.steer_angles)
    steer = np.clip((target - state.steer_angles) / dt, *limits.steer_rate)
    return ControlVector(np.clip(drive, *limits.drive_rate), steer)


class KinematicController:
    name = "kinematic"

    def __init__(self, vehicle: VehicleParams, tire: TireParams, limits: Limits,
                 gains: KinematicGains | None = None, dt: float = 0.01):
        self.vehicle, self.tire, self.limits = vehicle, tire, limits
        self.gains = gains or KinematicGains()
        self.dt = dt
        self.telemetry: dict = {}

    def reset(self):
        self.telemetry = {}

    def step(self, state: VehicleState, reference_window) -> ControlVector:
        window = np.atleast_2d(np.asarray(reference_window, dtype=float))
        ref_vel = (window[1] - window[0]) / self.dt if len(window) > 1 else None
        return kinematic_controller_step(state, window[0], self.gains, self.vehicle, self.tire,
                                         self.limits, self.dt, ref_vel)
