"""Seeded bounded disturbances, held constant between updates.

The reference experiment perturbs four channels: an additive inertial force
on the applied thrust, an additive body torque, an additive gyroscope
measurement error, and a rotation-plus-scaling of the consensus force as
computed by the controller. Only maxima are specified upstream, so each
vector is drawn with uniform random direction and magnitude uniform on
[0, max] (the least-informative bounded model). All draws come from a
Philox counter-based generator so runs are reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import so3


@dataclass(frozen=True)
class DisturbanceSpec:
    force_max: float = 0.25      # N
    torque_max: float = 0.25     # N*m
    gyro_max: float = 0.25       # rad/s
    f_angle_max: float = 0.25    # rad
    f_scale_range: tuple = (0.75, 1.25)
    update_hz: float = 10.0

    def __post_init__(self):
        for name in ("force_max", "torque_max", "gyro_max", "f_angle_max"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        lo, hi = self.f_scale_range
        if not (0 < lo <= hi):
            raise ValueError("f_scale_range must be positive with lower <= upper")
        if self.update_hz <= 0:
            raise ValueError("update_hz must be positive")
        object.__setattr__(self, "f_scale_range", (float(lo), float(hi)))


@dataclass(frozen=True, eq=False)
class DisturbanceDraw:
    """One update's draws for all n vehicles."""
    force: np.ndarray     # (n, 3)
    torque: np.ndarray    # (n, 3)
    gyro: np.ndarray      # (n, 3)
    f_rotation: np.ndarray  # (n, 3, 3)
    f_scale: np.ndarray   # (n,)


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide RNG identity: numpy Generator over Philox(seed)."""
    return np.random.Generator(np.random.Philox(key=seed))


def _bounded_vectors(rng: np.random.Generator, n: int, vmax: float) -> np.ndarray:
    # Direction and magnitude are always drawn so the stream layout does not
    # depend on the maxima; a zero max just scales the result to zero.
    dirs = rng.normal(size=(n, 3))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    mags = rng.uniform(0.0, 1.0, size=(n, 1))
    return (vmax * mags) * (dirs / norms)


def sample_disturbance(spec: DisturbanceSpec, rng: np.random.Generator, n: int) -> DisturbanceDraw:
    """Draw one update for n vehicles.

    Draw order (fixed): force dirs+mags, torque dirs+mags, gyro dirs+mags,
    rotation axes+angles, scales.
    """
    force = _bounded_vectors(rng, n, spec.force_max)
    torque = _bounded_vectors(rng, n, spec.torque_max)
    gyro = _bounded_vectors(rng, n, spec.gyro_max)
    axes = rng.normal(size=(n, 3))
    axes /= np.maximum(np.linalg.norm(axes, axis=1, keepdims=True), 1e-300)
    angles = rng.uniform(0.0, 1.0, size=n) * spec.f_angle_max
    rot = np.empty((n, 3, 3))
    for i in range(n):
        rot[i] = so3.so3_exp(angles[i] * axes[i])
    lo, hi = spec.f_scale_range
    scale = rng.uniform(lo, hi, size=n)
    return DisturbanceDraw(force=force, torque=torque, gyro=gyro,
                           f_rotation=rot, f_scale=scale)


def build_schedule(spec: DisturbanceSpec, seed: int, n: int, n_updates: int) -> DisturbanceDraw:
    """Stacked draws for a whole run: arrays with a leading (n_updates,) axis.

    Update k covers the zero-order-hold window [k, k+1) / update_hz.
    """
    rng = make_rng(seed)
    force = np.empty((n_updates, n, 3))
    torque = np.empty((n_updates, n, 3))
    gyro = np.empty((n_updates, n, 3))
    rot = np.empty((n_updates, n, 3, 3))
    scale = np.empty((n_updates, n))
    for k in range(n_updates):
        d = sample_disturbance(spec, rng, n)
        force[k], torque[k], gyro[k] = d.force, d.torque, d.gyro
        rot[k], scale[k] = d.f_rotation, d.f_scale
    return DisturbanceDraw(force=force, torque=torque, gyro=gyro,
                           f_rotation=rot, f_scale=scale)
