"""One underactuated rigid body: parameters, state, and equations of motion.

    dx/dt = v
    m dv/dt = -u R e3 + m g
    dR/dt = R [w]x
    J dw/dt = tau - w x (J w)

with u the thrust magnitude along the body axis q = -R e3 and w the
body-frame angular velocity. No drag, no actuator dynamics, no thrust
saturation: the feedback law may command u < 0 and the analysis assumes it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import so3


@dataclass(frozen=True, eq=False)
class VehicleParams:
    m: float
    J: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if self.m <= 0 or not np.isfinite(self.m):
            raise ValueError(f"mass must be positive and finite, got {self.m}")
        if J.shape != (3, 3) or not np.all(np.isfinite(J)):
            raise ValueError("inertia matrix must be a finite 3x3 matrix")
        if not np.allclose(J, J.T, atol=1e-12):
            raise ValueError("inertia matrix must be symmetric")
        if np.linalg.eigvalsh(J).min() <= 0:
            raise ValueError("inertia matrix must be positive definite")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "_J_inv", np.linalg.inv(J))

    @property
    def J_inv(self) -> np.ndarray:
        return self._J_inv


@dataclass(frozen=True, eq=False)
class VehicleState:
    x: np.ndarray
    v: np.ndarray
    R: np.ndarray
    w_body: np.ndarray

    def __post_init__(self):
        for name in ("x", "v", "w_body"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if vec.shape != (3,) or not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, vec)
        R = np.asarray(self.R, dtype=float)
        if not so3.is_rotation(R):
            raise ValueError(f"attitude is not in SO(3) within tolerance:\n{R}")
        object.__setattr__(self, "R", R)

    @property
    def q(self) -> np.ndarray:
        """Thrust direction vector -R e3 (unit)."""
        return -self.R[:, 2]


@dataclass(frozen=True, eq=False)
class ControlOutput:
    u: float
    tau: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        if not np.isfinite(self.u) or tau.shape != (3,) or not np.all(np.isfinite(tau)):
            raise ValueError("control output must be finite")
        object.__setattr__(self, "tau", tau)


@dataclass(frozen=True, eq=False)
class WorldConfig:
    """Inertial gravity vector; the reference scenario uses zero gravity."""
    gravity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        g = np.asarray(self.gravity, dtype=float)
        if g.shape != (3,) or not np.all(np.isfinite(g)):
            raise ValueError("gravity must be a finite 3-vector")
        object.__setattr__(self, "gravity", g)


def state_derivative(s: VehicleState, c: ControlOutput, p: VehicleParams,
                     world: WorldConfig) -> tuple:
    """(dx, dv, dR, dw) of the rigid-body equations of motion."""
    dx = s.v.copy()
    dv = -(c.u / p.m) * s.R[:, 2] + world.gravity
    dR = s.R @ so3.hat(s.w_body)
    dw = p.J_inv @ (c.tau - np.cross(s.w_body, p.J @ s.w_body))
    return dx, dv, dR, dw


def thrust_direction(s: VehicleState) -> np.ndarray:
    """Unit vector q = -R e3 along which thrust acts."""
    return s.q
