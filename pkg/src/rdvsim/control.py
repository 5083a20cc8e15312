"""Local and distributed rendezvous feedback.

Each vehicle sees only body-frame relative displacements/velocities of its
neighbors and its own body-frame angular velocity. With f the consensus
acceleration evaluated on those body-frame measurements:

    u   = -m (f . e3)
    tau = w x Jw - k1 J((w x f) x e3) - k1^2 k2 (w - k1 (f x e3))

The inner loop steers w toward the reference rate k1 (f x e3), which tilts
the thrust axis onto the desired force direction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .consensus import ConsensusLaw, eval_f
from .digraph import SensorDigraph
from .dynamics import ControlOutput, VehicleParams
from .so3 import E3


@dataclass(frozen=True)
class ControlGains:
    k1: float
    k2: float

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError(f"gains must be positive, got k1={self.k1}, k2={self.k2}")
        if self.k1 <= 1.0:
            # The convergence analysis assumes k1 > 1; smaller values are
            # allowed for experimentation but flagged.
            warnings.warn(f"k1={self.k1} <= 1 is below the analyzed gain range", stacklevel=2)


@dataclass(frozen=True, eq=False)
class BodyMeasurement:
    """Everything vehicle ``vehicle`` is allowed to sense, in its own frame."""
    vehicle: int
    neighbor_ids: tuple
    x_rel_body: np.ndarray  # (k, 3), rows ordered like neighbor_ids
    v_rel_body: np.ndarray  # (k, 3)
    w_body: np.ndarray      # (3,)

    def __post_init__(self):
        object.__setattr__(self, "neighbor_ids", tuple(self.neighbor_ids))
        k = len(self.neighbor_ids)
        x = np.asarray(self.x_rel_body, float).reshape(k, 3)
        v = np.asarray(self.v_rel_body, float).reshape(k, 3)
        object.__setattr__(self, "x_rel_body", x)
        object.__setattr__(self, "v_rel_body", v)
        object.__setattr__(self, "w_body", np.asarray(self.w_body, float))


def measure(states, g: SensorDigraph, i: int) -> BodyMeasurement:
    """Body-frame relative states of vehicle i's neighbors plus its own rate.

    x_ij^i = R_i^T (x_j - x_i), v_ij^i = R_i^T (v_j - v_i).
    """
    si = states[i - 1]
    nbrs = g.neighbors(i)
    x_rel = np.empty((len(nbrs), 3))
    v_rel = np.empty((len(nbrs), 3))
    for row, j in enumerate(nbrs):
        sj = states[j - 1]
        x_rel[row] = si.R.T @ (sj.x - si.x)
        v_rel[row] = si.R.T @ (sj.v - si.v)
    return BodyMeasurement(vehicle=i, neighbor_ids=tuple(nbrs),
                           x_rel_body=x_rel, v_rel_body=v_rel,
                           w_body=si.w_body.copy())


def consensus_force_body(meas: BodyMeasurement, law: ConsensusLaw) -> np.ndarray:
    """f evaluated on the body-frame measurements (same gains, rotated inputs)."""
    i = meas.vehicle
    f = np.zeros(3)
    for row, j in enumerate(meas.neighbor_ids):
        f += law.a[(i, j)] * meas.x_rel_body[row] + law.b[(i, j)] * meas.v_rel_body[row]
    return f


def reference_omega(f_body: np.ndarray, k1: float) -> np.ndarray:
    """Inner-loop reference angular velocity k1 (f x e3), body frame."""
    return k1 * np.cross(f_body, E3)


def feedback_from_f(f_body: np.ndarray, w_body: np.ndarray, gains: ControlGains,
                    p: VehicleParams) -> ControlOutput:
    """The feedback law for a given body-frame consensus force and body rate."""
    f = np.asarray(f_body, float)
    w = np.asarray(w_body, float)
    k1, k2 = gains.k1, gains.k2
    u = -p.m * float(f @ E3)
    tau = (np.cross(w, p.J @ w)
           - k1 * (p.J @ np.cross(np.cross(w, f), E3))
           - k1 * k1 * k2 * (w - k1 * np.cross(f, E3)))
    return ControlOutput(u=u, tau=tau)


def control(meas: BodyMeasurement, law: ConsensusLaw, gains: ControlGains,
            p: VehicleParams) -> ControlOutput:
    """Thrust magnitude and body torque from body-frame measurements only."""
    return feedback_from_f(consensus_force_body(meas, law), meas.w_body, gains, p)


def ideal_inertial_force(states, g: SensorDigraph, law: ConsensusLaw, i: int) -> np.ndarray:
    """f_i evaluated directly on inertial relative states.

    Equals R_i times the body-frame evaluation because f_i is linear.
    """
    si = states[i - 1]
    pairs = [(states[j - 1].x - si.x, states[j - 1].v - si.v) for j in g.neighbors(i)]
    return eval_f(law, g, i, pairs)
