"""Wear work, tracking RMSE and the performance balance index."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WearLedger:
    W_s: float = 0.0
    W_alpha: float = 0.0
    W_t: float = 0.0

    @property
    def W_tw(self) -> float:
        return self.W_s + self.W_alpha + self.W_t


@dataclass(frozen=True)
class TrackingErrors:
    e_x: float = 0.0    # cm
    e_y: float = 0.0    # cm
    e_phi: float = 0.0  # deg

    @property
    def e_bar(self) -> float:
        # mixes centimetres and degrees on purpose
        return (self.e_x + self.e_y + self.e_phi) / 3.0


def wear_work(powers, T: float) -> WearLedger:
    """Per-channel wear work: each channel's power summed over all steps times T.

    ``powers`` is an (N, 3) array of (P_s, P_alpha, P_t) per control step.
    """
    powers = np.asarray(powers, dtype=float).reshape(-1, 3)
    if len(powers) == 0:
        return WearLedger()
    w = powers.sum(axis=0) * T
    return WearLedger(float(w[0]), float(w[1]), float(w[2]))


def tracking_errors(poses, reference) -> TrackingErrors:
    """RMSE per axis; positions reported in cm and heading in degrees."""
    poses = np.asarray(poses, dtype=float).reshape(-1, 3)
    reference = np.asarray(reference, dtype=float).reshape(-1, 3)
    if poses.shape != reference.shape:
        raise ValueError(f"pose log {poses.shape} and reference {reference.shape} differ")
    if len(poses) == 0:
        return TrackingErrors()
    rmse = np.sqrt(np.mean((poses - reference) ** 2, axis=0))
    return TrackingErrors(100.0 * rmse[0], 100.0 * rmse[1], float(np.degrees(rmse[2])))


def performance_balance(W_tw: float, e_bar: float) -> float:
    """Trade-off index; the tracking exponent jumps from 0.1 to 0.5 at e_bar = 50."""
    if W_tw < 0 or e_bar < 0:
        raise ValueError("W_tw and e_bar must be nonnegative")
    if e_bar == 0.0:
        return 0.0
    exponent = 0.1 if e_bar < 50.0 else 0.5
    return W_tw ** 0.5 * e_bar ** exponent
