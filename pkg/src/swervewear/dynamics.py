"""Planar multi-axle plant: global acceleration from tire forces and an RK4 integrator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, ControlVector, Limits, TireParams, VehicleParams, VehicleState
from .tire import V_EPS, WearPower


@dataclass(frozen=True)
class Acceleration:
    accel_global: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.accel_global)):
            raise FloatingPointError(f"non-finite acceleration {self.accel_global}")


@dataclass(frozen=True)
class PlantSettings:
    dt: float = 0.01
    substeps: int = 8
    actuator_lag: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"sim.dt must be positive, got {self.dt}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ConfigError(f"sim.substeps must be a positive integer, got {self.substeps}")
        if self.actuator_lag < 0:
            raise ConfigError(f"sim.actuator_lag must be nonnegative, got {self.actuator_lag}")


def wheel_arrays(vehicle: VehicleParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-wheel (x, y) body positions flattened in (axle, side) order."""
    pos = vehicle.wheel_positions().reshape(-1, 2)
    return pos[:, 0].copy(), pos[:, 1].copy()


def wheel_terms(phi, velocity, delta, drive, steer, wx, wy, tire: TireParams):
    """Vectorised slip, force and wear terms for every wheel.

    Returns body-frame wheel forces (fx_b, fy_b) and the per-wheel wear
    powers (p_s, p_alpha, p_t).
    """
    c, s = np.cos(phi), np.sin(phi)
    vx_b = c * velocity[0] + s * velocity[1]
    vy_b = -s * velocity[0] + c * velocity[1]
    yaw_rate = velocity[2]
    ux = vx_b - yaw_rate * wy
    uy = vy_b + yaw_rate * wx

    cd, sd = np.cos(delta), np.sin(delta)
    vwx = cd * ux + sd * uy
    vwy = -sd * ux + cd * uy

    moving = np.hypot(ux, uy) > V_EPS
    alpha = np.where(moving, np.arctan2(-vwy, np.abs(vwx)), 0.0)
    slip_speed = drive * tire.wheel_radius - vwx
    ratio = slip_speed / np.maximum(np.abs(vwx), V_EPS)

    fx = tire.longitudinal(ratio)
    fy = tire.lateral(alpha)

    fx_b = cd * fx - sd * fy
    fy_b = sd * fx + cd * fy

    p_s = np.abs(fx * slip_speed)
    p_a = np.abs(fy * vwy)
    p_t = np.abs(tire.steer_loss_coeff * tire.vertical_load * steer)
    return fx_b, fy_b, p_s, p_a, p_t


def _accel_from_forces(phi, fx_b, fy_b, wx, wy, vehicle: VehicleParams) -> np.ndarray:
    fx, fy = fx_b.sum(), fy_b.sum()
    moment = np.sum(wx * fy_b - wy * fx_b)
    c, s = np.cos(phi), np.sin(phi)
    return np.array([
        (c * fx - s * fy) / vehicle.mass,
        (s * fx + c * fy) / vehicle.mass,
        moment / vehicle.yaw_inertia,
    ])


def body_acceleration(state: VehicleState, drive_rates, vehicle: VehicleParams,
                      tire: TireParams) -> Acceleration:
    """Global-frame acceleration produced by the tire forces at ``state``."""
    wx, wy = wheel_arrays(vehicle)
    drive = np.asarray(drive_rates, dtype=float).ravel()
    delta = state.steer_angles.ravel()
    phi = state.pose[2]
    fx_b, fy_b, *_ = wheel_terms(phi, state.velocity, delta, drive, np.zeros_like(drive), wx, wy, tire)
    return Acceleration(_accel_from_forces(phi, fx_b, fy_b, wx, wy, vehicle))


class _Rhs:
    """Right-hand side of the plant ODE over the packed state vector.

    Layout: pose(3), velocity(3), steer angles(m), drive rates(m), steer rates(m).
    """

    def __init__(self, vehicle, tire, limits, control: ControlVector, lag: float):
        self.vehicle, self.tire, self.limits = vehicle, tire, limits
        self.wx, self.wy = wheel_arrays(vehicle)
        self.m = vehicle.wheel_count
        self.cmd_drive = control.drive_rates.ravel()
        self.cmd_steer = control.steer_rates.ravel()
        self.lag = lag

    def split(self, y):
        m = self.m
        return y[0:3], y[3:6], y[6:6 + m], y[6 + m:6 + 2 * m], y[6 + 2 * m:6 + 3 * m]

    def rates(self, y):
        _, _, delta, drive, steer = self.split(y)
        if self.lag == 0.0:
            drive, steer = self.cmd_drive, self.cmd_steer
        lo, hi = self.limits.steer_angle
        # the steering stop absorbs any rate pushing past it
        steer = np.where((delta >= hi) & (steer > 0) | (delta <= lo) & (steer < 0), 0.0, steer)
        return drive, steer

    def __call__(self, y):
        pose, vel, delta, drive_state, steer_state = self.split(y)
        drive, steer = self.rates(y)
        fx_b, fy_b, *_ = wheel_terms(pose[2], vel, delta, drive, steer, self.wx, self.wy, self.tire)
        acc = _accel_from_forces(pose[2], fx_b, fy_b, self.wx, self.wy, self.vehicle)
        if self.lag > 0.0:
            d_drive = (self.cmd_drive - drive_state) / self.lag
            d_steer = (self.cmd_steer - steer_state) / self.lag
        else:
            d_drive = d_steer = np.zeros(self.m)
        return np.concatenate([vel, acc, steer, d_drive, d_steer])

    def wear(self, y) -> np.ndarray:
        pose, vel, delta, _, _ = self.split(y)
        drive, steer = self.rates(y)
        _, _, p_s, p_a, p_t = wheel_terms(pose[2], vel, delta, drive, steer, self.wx, self.wy, self.tire)
        return np.array([p_s.sum(), p_a.sum(), p_t.sum()])


def pack_state(state: VehicleState) -> np.ndarray:
    return np.concatenate([state.pose, state.velocity, state.steer_angles.ravel(),
                           state.drive_rates.ravel(), state.steer_rates.ravel()])


def unpack_state(y: np.ndarray, axle_count: int) -> VehicleState:
    m = 2 * axle_count
    shape = (axle_count, 2)
    return VehicleState(
        pose=y[0:3], velocity=y[3:6],
        steer_angles=y[6:6 + m].reshape(shape),
        drive_rates=y[6 + m:6 + 2 * m].reshape(shape),
        steer_rates=y[6 + 2 * m:6 + 3 * m].reshape(shape),
    )


def plant_step(state: VehicleState, control: ControlVector, settings: PlantSettings,
               vehicle: VehicleParams, tire: TireParams, limits: Limits):
    """Advance the plant by one control period with classical RK4.

    Returns ``(next_state, mean_wear, clamped)`` where ``mean_wear`` is the
    trapezoid average of the wear power over the substep nodes and
    ``clamped`` reports whether the command had to be limited.
    """
    control, clamped = control.clamped(limits)
    rhs = _Rhs(vehicle, tire, limits, control, settings.actuator_lag)
    lo, hi = limits.steer_angle
    m = vehicle.wheel_count
    steer_slice = slice(6, 6 + m)

    y = pack_state(state)
    if settings.actuator_lag == 0.0:
        y[6 + m:6 + 2 * m] = rhs.cmd_drive
        y[6 + 2 * m:] = rhs.cmd_steer
    h = settings.dt / settings.substeps
    wear_nodes = [rhs.wear(y)]
    for _ in range(settings.substeps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y[steer_slice] = np.clip(y[steer_slice], lo, hi)
        wear_nodes.append(rhs.wear(y))
    nodes = np.array(wear_nodes)
    mean = (0.5 * (nodes[0] + nodes[-1]) + nodes[1:-1].sum(axis=0)) / settings.substeps
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("plant state became non-finite")
    return unpack_state(y, vehicle.axle_count), WearPower(*(float(p) for p in mean)), clamped
