"""Tire-wear-aware receding-horizon controller solved by simulated annealing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import ConfigError, ControlVector, Limits, TireParams, VehicleParams, VehicleState
from .dynamics import wheel_arrays
from .tire import V_EPS


@dataclass(frozen=True)
class MpcSettings:
    prediction_horizon: int = 50
    control_horizon: int = 5
    weights_Q: tuple[float, float, float] = (1.0, 1.0, 10.0)
    weights_L: tuple[float, float, float] = (1e-12, 1e-12, 1e-12)
    dt: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "weights_Q", tuple(float(q) for q in self.weights_Q))
        object.__setattr__(self, "weights_L", tuple(float(w) for w in self.weights_L))
        if not 1 <= self.control_horizon <= self.prediction_horizon:
            raise ConfigError("mpc: need 1 <= control_horizon <= prediction_horizon")
        if len(self.weights_Q) != 3 or min(self.weights_Q) <= 0:
            raise ConfigError("mpc.Q must hold three positive weights")
        if len(self.weights_L) != 3 or min(self.weights_L) < 0:
            raise ConfigError("mpc.L must hold three nonnegative weights")
        if not self.dt > 0:
            raise ConfigError("mpc.dt must be positive")

    @property
    def wear_aware(self) -> bool:
        return any(w > 0 for w in self.weights_L)


@dataclass(frozen=True)
class SaSettings:
    """Annealing schedule. ``initial_temp=None`` picks the temperature from the
    spread of random-perturbation costs around the starting plan."""

    initial_temp: float | None = None
    cooling_rate: float = 0.95
    iterations: int = 40
    moves_per_temp: int = 30
    perturb_scale: float = 0.2
    subset_fraction: float = 0.25
    rng_seed: int = 0
    auto_temp_samples: int = 50

    def __post_init__(self):
        if not 0 < self.cooling_rate < 1:
            raise ConfigError("sa.cooling_rate must lie in (0, 1)")
        if not 0 < self.perturb_scale <= 1:
            raise ConfigError("sa.perturb_scale must lie in (0, 1]")
        if not 0 < self.subset_fraction <= 1:
            raise ConfigError("sa.subset_fraction must lie in (0, 1]")
        if self.iterations < 1 or self.moves_per_temp < 1:
            raise ConfigError("sa.iterations and sa.moves_per_temp must be positive")
        if self.initial_temp is not None and not self.initial_temp > 0:
            raise ConfigError("sa.initial_temp must be positive or 'auto'")


@dataclass
class HorizonPlan:
    controls: np.ndarray          # (N_c, 4n) stacked [drive rates, steer rates]
    predicted_states: np.ndarray  # (N_p, 3) poses after each step
    predicted_wear: np.ndarray    # (N_p, 3) wear power triples
    cost: float
    tracking_cost: float = 0.0
    wear_cost: float = 0.0
    telemetry: dict = field(default_factory=dict)

    def control(self, k: int, axle_count: int) -> ControlVector:
        return ControlVector.from_flat(self.controls[k], axle_count)


class PredictionModel:
    """Packed vehicle/tire constants consumed by the compiled rollout."""

    def __init__(self, vehicle: VehicleParams, tire: TireParams, limits: Limits):
        self.vehicle, self.tire, self.limits = vehicle, tire, limits
        self.wx, self.wy = wheel_arrays(vehicle)
        self.phys = np.array([vehicle.mass, vehicle.yaw_inertia, tire.wheel_radius,
                              tire.steer_loss_coeff * tire.vertical_load, V_EPS,
                              limits.steer_angle[0], limits.steer_angle[1]])
        self.mf = np.stack([tire.longitudinal.as_array(), tire.lateral.as_array()])
        lower = np.concatenate([np.full(vehicle.wheel_count, limits.drive_rate[0]),
                                np.full(vehicle.wheel_count, limits.steer_rate[0])])
        upper = np.concatenate([np.full(vehicle.wheel_count, limits.drive_rate[1]),
                                np.full(vehicle.wheel_count, limits.steer_rate[1])])
        self.lower, self.upper = lower, upper

    @property
    def control_size(self) -> int:
        return 2 * self.vehicle.wheel_count


@numba.njit(cache=True)
def _mf(xi, B, C, D, E):
    bx = B * xi
    return D * math.sin(C * math.atan(bx - E * (bx - math.atan(bx))))


@numba.njit(cache=True)
def _step_terms(pose, vel, delta, u, wx, wy, phys, mf, acc, wear):
    """Global acceleration and summed wear power at one state under control ``u``."""
    m = wx.shape[0]
    mass, inertia, radius, steer_loss, v_eps = phys[0], phys[1], phys[2], phys[3], phys[4]
    c, s = math.cos(pose[2]), math.sin(pose[2])
    vx_b = c * vel[0] + s * vel[1]
    vy_b = -s * vel[0] + c * vel[1]
    fx_sum = 0.0
    fy_sum = 0.0
    moment = 0.0
    p_s = 0.0
    p_a = 0.0
    p_t = 0.0
    for w in range(m):
        ux = vx_b - vel[2] * wy[w]
        uy = vy_b + vel[2] * wx[w]
        cd, sd = math.cos(delta[w]), math.sin(delta[w])
        vwx = cd * ux + sd * uy
        vwy = -sd * ux + cd * uy
        if math.hypot(ux, uy) > v_eps:
            alpha = math.atan2(-vwy, abs(vwx))
        else:
            alpha = 0.0
        slip_speed = u[w] * radius - vwx
        ratio = slip_speed / max(abs(vwx), v_eps)
        fx = _mf(ratio, mf[0, 0], mf[0, 1], mf[0, 2], mf[0, 3])
        fy = _mf(alpha, mf[1, 0], mf[1, 1], mf[1, 2], mf[1, 3])
        fxb = cd * fx - sd * fy
        fyb = sd * fx + cd * fy
        fx_sum += fxb
        fy_sum += fyb
        moment += wx[w] * fyb - wy[w] * fxb
        p_s += abs(fx * slip_speed)
        p_a += abs(fy * vwy)
        p_t += abs(steer_loss * u[m + w])
    acc[0] = (c * fx_sum - s * fy_sum) / mass
    acc[1] = (s * fx_sum + c * fy_sum) / mass
    acc[2] = moment / inertia
    wear[0] = p_s
    wear[1] = p_a
    wear[2] = p_t


@numba.njit(cache=True)
def _rollout_kernel(pose0, vel0, delta0, U, n_pred, dt, wx, wy, phys, mf, states, wears):
    m = wx.shape[0]
    n_ctrl = U.shape[0]
    lo, hi = phys[5], phys[6]
    pose = pose0.copy()
    vel = vel0.copy()
    delta = delta0.copy()
    acc = np.empty(3)
    for k in range(n_pred):
        u = U[min(k, n_ctrl - 1)]
        # wear of step k is charged at the state the step starts from
        _step_terms(pose, vel, delta, u, wx, wy, phys, mf, acc, wears[k])
        for a in range(3):
            pose[a] += dt * vel[a]
            vel[a] += dt * acc[a]
        for w in range(m):
            d = delta[w] + dt * u[m + w]
            delta[w] = min(max(d, lo), hi)
        for a in range(3):
            states[k, a] = pose[a]


@numba.njit(cache=True)
def _rollout_cost(pose0, vel0, delta0, U, n_pred, dt, wx, wy, phys, mf, ref, Q, L):
    states = np.empty((n_pred, 3))
    wears = np.empty((n_pred, 3))
    _rollout_kernel(pose0, vel0, delta0, U, n_pred, dt, wx, wy, phys, mf, states, wears)
    total = 0.0
    for k in range(n_pred):
        for a in range(3):
            e = states[k, a] - ref[k, a]
            total += Q[a] * e * e + L[a] * wears[k, a] * wears[k, a]
    return total


def rollout(state: VehicleState, controls, settings: MpcSettings, model: PredictionModel):
    """Forward-Euler prediction of poses and wear power over the prediction horizon.

    ``controls`` has one row per control step; rows beyond the control
    horizon repeat the last one.
    """
    U = np.ascontiguousarray(np.atleast_2d(np.asarray(controls, dtype=float)))
    n_pred = settings.prediction_horizon
    states = np.empty((n_pred, 3))
    wears = np.empty((n_pred, 3))
    _rollout_kernel(np.asarray(state.pose, float), np.asarray(state.velocity, float),
                    state.steer_angles.ravel().astype(float), U, n_pred, settings.dt,
                    model.wx, model.wy, model.phys, model.mf, states, wears)
    return states, wears


def cost_terms(states, wears, reference, settings: MpcSettings) -> tuple[float, float]:
    """Tracking and wear parts of the horizon cost, evaluated block by block."""
    states, wears, reference = (np.asarray(a, dtype=float) for a in (states, wears, reference))
    if not (states.shape == reference.shape == wears.shape):
        raise ValueError(f"shape mismatch: states {states.shape}, wear {wears.shape}, "
                         f"reference {reference.shape}")
    err = states - reference
    tracking = float(np.sum(err * err * np.asarray(settings.weights_Q)))
    wear = float(np.sum(wears * wears * np.asarray(settings.weights_L)))
    return tracking, wear


def cost_function(states, wears, reference, settings: MpcSettings) -> float:
    tracking, wear = cost_terms(states, wears, reference, settings)
    return tracking + wear


def clamp_controls(raw, limits: Limits, wheel_count: int | None = None) -> np.ndarray:
    """Clip stacked control rows (drive rates first, then steer rates) to ``limits``."""
    raw = np.asarray(raw, dtype=float)
    m = raw.shape[-1] // 2 if wheel_count is None else wheel_count
    out = raw.copy()
    out[..., :m] = np.clip(raw[..., :m], *limits.drive_rate)
    out[..., m:] = np.clip(raw[..., m:], *limits.steer_rate)
    return out


@numba.njit(cache=True)
def _anneal_kernel(x0, lower, upper, free, sigma, subset_fraction, temp0, auto_samples, cooling,
                   iterations, moves, seed, rows, pose, vel, delta, n_pred, dt, wx, wy, phys, mf,
                   ref, Q, L):
    np.random.seed(seed)
    size = x0.shape[0]
    free_idx = np.nonzero(free)[0]
    n_free = free_idx.shape[0]
    cols = size // rows

    current = np.minimum(np.maximum(x0, lower), upper)
    current_cost = _rollout_cost(pose, vel, delta, current.reshape((rows, cols)), n_pred, dt,
                                 wx, wy, phys, mf, ref, Q, L)
    initial_cost = current_cost
    best = current.copy()
    best_cost = current_cost
    candidate = np.empty(size)
    evaluations = 1

    temp = temp0
    if temp <= 0.0:
        samples = np.empty(auto_samples)
        for a in range(auto_samples):
            _propose(current, candidate, lower, upper, free_idx, sigma, subset_fraction)
            samples[a] = _rollout_cost(pose, vel, delta, candidate.reshape((rows, cols)), n_pred,
                                       dt, wx, wy, phys, mf, ref, Q, L)
        evaluations += auto_samples
        temp = np.std(samples) if auto_samples > 1 else 0.0
        if not temp > 0.0:
            temp = max(abs(current_cost), 1e-12)

    accepted = 0
    if n_free > 0:
        for _ in range(iterations):
            for _ in range(moves):
                _propose(current, candidate, lower, upper, free_idx, sigma, subset_fraction)
                c = _rollout_cost(pose, vel, delta, candidate.reshape((rows, cols)), n_pred, dt,
                                  wx, wy, phys, mf, ref, Q, L)
                evaluations += 1
                d = c - current_cost
                if d <= 0.0 or np.random.random() < math.exp(-d / temp):
                    current[:] = candidate
                    current_cost = c
                    accepted += 1
                    if c < best_cost:
                        best[:] = candidate
                        best_cost = c
            temp *= cooling
    return best, best_cost, initial_cost, evaluations, accepted, temp


@numba.njit(cache=True)
def _propose(x, out, lower, upper, free_idx, sigma, subset_fraction):
    out[:] = x
    n_free = free_idx.shape[0]
    if n_free == 0:
        return
    moved = False
    for a in range(n_free):
        if np.random.random() < subset_fraction:
            i = free_idx[a]
            out[i] = x[i] + sigma[i] * np.random.standard_normal()
            moved = True
    if not moved:
        i = free_idx[np.random.randint(0, n_free)]
        out[i] = x[i] + sigma[i] * np.random.standard_normal()
    for i in range(x.shape[0]):
        out[i] = min(max(out[i], lower[i]), upper[i])


def nominal_controls(state: VehicleState, settings: MpcSettings, model: PredictionModel) -> np.ndarray:
    """Zero-slip plan: wheels spin at their current ground speed, steering held."""
    m = model.vehicle.wheel_count
    phi = state.pose[2]
    c, s = math.cos(phi), math.sin(phi)
    vx_b = c * state.velocity[0] + s * state.velocity[1]
    vy_b = -s * state.velocity[0] + c * state.velocity[1]
    ux = vx_b - state.velocity[2] * model.wy
    uy = vy_b + state.velocity[2] * model.wx
    delta = state.steer_angles.ravel()
    vwx = np.cos(delta) * ux + np.sin(delta) * uy
    row = np.concatenate([vwx / model.tire.wheel_radius, np.zeros(m)])
    U = np.tile(row, (settings.control_horizon, 1))
    return clamp_controls(U, model.limits, m)


def shift_plan(controls: np.ndarray) -> np.ndarray:
    """Drop the first row and repeat the last one."""
    return np.vstack([controls[1:], controls[-1:]])


def pad_reference(reference, length: int) -> np.ndarray:
    reference = np.asarray(reference, dtype=float)
    if reference.ndim != 2 or reference.shape[1] != 3 or len(reference) == 0:
        raise ValueError("reference must be a non-empty (k, 3) array of poses")
    if len(reference) >= length:
        return reference[:length]
    pad = np.repeat(reference[-1:], length - len(reference), axis=0)
    return np.vstack([reference, pad])


def solve(state: VehicleState, reference, settings: MpcSettings, sa: SaSettings,
          model: PredictionModel, warm_start: HorizonPlan | np.ndarray | None = None,
          rng: np.random.Generator | None = None, free=None) -> HorizonPlan:
    """Anneal the stacked control plan against the horizon cost.

    The search starts from ``warm_start`` shifted by one step, or from the
    zero-slip nominal plan. ``free`` optionally masks which entries of the
    (N_c, 4n) plan may move. The per-call seed is drawn from ``rng``; with
    no ``rng`` it comes from ``sa.rng_seed``.
    """
    reference = np.asarray(reference, dtype=float)
    if len(reference) < settings.prediction_horizon:
        raise ValueError(f"reference has {len(reference)} poses, "
                         f"prediction horizon needs {settings.prediction_horizon}")
    ref = np.ascontiguousarray(reference[:settings.prediction_horizon])
    m = model.vehicle.wheel_count

    if warm_start is None:
        x0 = nominal_controls(state, settings, model)
    else:
        prev = warm_start.controls if isinstance(warm_start, HorizonPlan) else np.asarray(warm_start)
        x0 = clamp_controls(shift_plan(prev), model.limits, m)

    pose = np.asarray(state.pose, float)
    vel = np.asarray(state.velocity, float)
    delta = state.steer_angles.ravel().astype(float)
    Q = np.asarray(settings.weights_Q)
    L = np.asarray(settings.weights_L)
    shape = x0.shape

    lower = np.tile(model.lower, (shape[0], 1)).ravel()
    upper = np.tile(model.upper, (shape[0], 1)).ravel()
    free = np.ones(x0.size, dtype=np.bool_) if free is None else np.asarray(free, dtype=np.bool_).ravel()
    rng = np.random.default_rng(sa.rng_seed) if rng is None else rng
    seed = int(rng.integers(2 ** 31 - 1))
    best, best_cost, initial_cost, evaluations, accepted, final_temp = _anneal_kernel(
        x0.ravel().astype(float), lower, upper, free, sa.perturb_scale * (upper - lower),
        sa.subset_fraction, -1.0 if sa.initial_temp is None else sa.initial_temp,
        sa.auto_temp_samples, sa.cooling_rate, sa.iterations, sa.moves_per_temp, seed, shape[0],
        pose, vel, delta, settings.prediction_horizon, settings.dt, model.wx, model.wy,
        model.phys, model.mf, ref, Q, L)
    info = dict(evaluations=int(evaluations), initial_cost=float(initial_cost),
                accepted=int(accepted), final_temp=float(final_temp), seed=seed)
    controls = best.reshape(shape)
    states, wears = rollout(state, controls, settings, model)
    tracking, wear = cost_terms(states, wears, ref, settings)
    info.update(best_cost=tracking + wear, tracking=tracking, wear=wear)
    return HorizonPlan(controls, states, wears, tracking + wear, tracking, wear, info)


class MpcController:
    """Receding-horizon shell around :func:`solve` with warm starting."""

    def __init__(self, vehicle: VehicleParams, tire: TireParams, limits: Limits,
                 settings: MpcSettings | None = None, sa: SaSettings | None = None, name: str = "mpc"):
        self.settings = settings or MpcSettings()
        self.sa = sa or SaSettings()
        self.model = PredictionModel(vehicle, tire, limits)
        self.name = name
        self.reset()

    def reset(self):
        self.plan: HorizonPlan | None = None
        self.telemetry: dict = {}
        self._rng = np.random.default_rng(self.sa.rng_seed)

    def step(self, state: VehicleState, reference_window) -> ControlVector:
        ref = pad_reference(reference_window, self.settings.prediction_horizon)
        plan = solve(state, ref, self.settings, self.sa, self.model, warm_start=self.plan, rng=self._rng)
        self.plan = plan
        self.telemetry = dict(sa_iters=plan.telemetry["evaluations"], J=plan.cost,
                              J_track=plan.tracking_cost, J_wear=plan.wear_cost,
                              J_initial=plan.telemetry["initial_cost"])
        return plan.control(0, self.model.vehicle.axle_count)
