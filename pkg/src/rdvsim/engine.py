"""Fixed-step integration of the n-vehicle closed loop.

``step`` is the plain-numpy reference integrator; ``run`` drives the
compiled kernel in ``_kernels`` over a whole scenario. Both advance
positions, velocities and body rates with the classical 4-stage tableau and
the attitude multiplicatively through the exponential of the
dexpinv-corrected RK-averaged body rate (a Munthe-Kaas step), followed by a
Newton-Schulz orthonormality sweep. A test pins the two paths against each
other.

Controls are computed once per step from the start-of-step states
(zero-order hold); ``SimConfig.zoh=False`` re-evaluates them at every stage,
which recovers clean 4th-order convergence to the continuous closed loop and
exists for convergence studies.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, so3
from .consensus import ConsensusLaw, build_relative_closed_loop, certify
from .control import ControlGains
from .digraph import SensorDigraph
from .disturbance import DisturbanceDraw, DisturbanceSpec, build_schedule
from .dynamics import ControlOutput, VehicleState, WorldConfig

# At the reference gains the fastest rotational mode needs >= ~100 steps per
# period; dt above this is rejected rather than silently unstable.
DT_MAX = 0.01


class NumericalAbort(RuntimeError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite state at step {step} (t = {t:.6g} s)")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_final: float = 60.0
    seed: int = 0
    disturbance: DisturbanceSpec | None = None
    record_every: int = 10
    zoh: bool = True

    def __post_init__(self):
        if not (0 < self.dt <= DT_MAX):
            raise ValueError(f"dt must be in (0, {DT_MAX}], got {self.dt}")
        if self.t_final < self.dt:
            raise ValueError("t_final must be at least dt")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass(eq=False)
class Trajectory:
    """Recorded run on a uniform time grid of stride record_every * dt."""
    t: np.ndarray      # (K,)
    pos: np.ndarray    # (K, n, 3)
    vel: np.ndarray    # (K, n, 3)
    rot: np.ndarray    # (K, n, 3, 3)
    omega: np.ndarray  # (K, n, 3)
    u: np.ndarray      # (K, n)
    tau: np.ndarray    # (K, n, 3)
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.pos.shape[1]

    @property
    def n_records(self) -> int:
        return self.t.shape[0]

    def speeds(self) -> np.ndarray:
        """Per-vehicle linear speed ||v_i(t)||, shape (K, n)."""
        return np.linalg.norm(self.vel, axis=2)

    def max_pairwise_distance(self) -> np.ndarray:
        """max_{i<j} ||x_i - x_j|| at every record, shape (K,)."""
        diff = self.pos[:, :, None, :] - self.pos[:, None, :, :]
        return np.linalg.norm(diff, axis=3).max(axis=(1, 2))

    def states_at(self, k: int) -> list:
        return [VehicleState(self.pos[k, i], self.vel[k, i], self.rot[k, i], self.omega[k, i])
                for i in range(self.n)]


def _graph_csr(g: SensorDigraph, law: ConsensusLaw):
    ptr = np.zeros(g.n + 1, dtype=np.int64)
    idx = []
    a_w = []
    b_w = []
    for i in range(1, g.n + 1):
        for j in g.neighbors(i):
            idx.append(j - 1)
            a_w.append(law.a[(i, j)])
            b_w.append(law.b[(i, j)])
        ptr[i] = len(idx)
    return (ptr, np.asarray(idx, dtype=np.int64),
            np.asarray(a_w, float), np.asarray(b_w, float))


def _raw_controls(pos, vel, rot, om, graph, law, gains, m, J, draw, update_idx):
    """(u, tau) arrays for all vehicles from raw state arrays.

    The controller sees the gyro error and the rotated/scaled consensus
    force when a disturbance draw is given; the plant state is untouched.
    """
    n = pos.shape[0]
    k1, k2 = gains.k1, gains.k2
    u = np.empty(n)
    tau = np.empty((n, 3))
    e3 = so3.E3
    for i in range(1, n + 1):
        s = np.zeros(3)
        for j in graph.neighbors(i):
            s += law.a[(i, j)] * (pos[j - 1] - pos[i - 1]) + law.b[(i, j)] * (vel[j - 1] - vel[i - 1])
        f = rot[i - 1].T @ s
        w = om[i - 1]
        if draw is not None:
            f = draw.f_scale[update_idx, i - 1] * (draw.f_rotation[update_idx, i - 1] @ f)
            w = w + draw.gyro[update_idx, i - 1]
        u[i - 1] = -m[i - 1] * f[2]
        Ji = J[i - 1]
        tau[i - 1] = (np.cross(w, Ji @ w)
                      - k1 * (Ji @ np.cross(np.cross(w, f), e3))
                      - k1 * k1 * k2 * (w - k1 * np.cross(f, e3)))
    return u, tau


def step(states, params, world: WorldConfig, graph: SensorDigraph,
         law: ConsensusLaw, gains: ControlGains, dt: float,
         draw: DisturbanceDraw | None = None, update_idx: int = 0,
         zoh: bool = True) -> tuple:
    """One reference integrator step; returns (next_states, controls).

    ``draw`` rows at ``update_idx`` supply the held disturbance values. The
    arithmetic mirrors the compiled kernel stage for stage.
    """
    n = len(states)
    pos = np.array([s.x for s in states])
    vel = np.array([s.v for s in states])
    om = np.array([s.w_body for s in states])
    rot = np.array([s.R for s in states])
    m = np.array([p.m for p in params])
    J = np.array([p.J for p in params])
    Jinv = np.array([p.J_inv for p in params])
    u, tau = _raw_controls(pos, vel, rot, om, graph, law, gains, m, J, draw, update_idx)
    controls = [ControlOutput(u=float(u[i]), tau=tau[i]) for i in range(n)]

    if draw is not None:
        Fn = draw.force[update_idx]
        Tn = draw.torque[update_idx]
    else:
        Fn = np.zeros((n, 3))
        Tn = np.zeros((n, 3))
    gvec = world.gravity

    def derivs(rot_s, om_s, sig_s, vel_s, u_s, tau_s):
        acc = (-u_s[:, None] * rot_s[:, :, 2] + Fn) / m[:, None] + gvec
        wd = np.empty((n, 3))
        kap = np.empty((n, 3))
        for i in range(n):
            Jw = J[i] @ om_s[i]
            wd[i] = Jinv[i] @ (tau_s[i] + Tn[i] - np.cross(om_s[i], Jw))
            c = np.cross(sig_s[i], om_s[i])
            kap[i] = om_s[i] + 0.5 * c + np.cross(sig_s[i], c) / 12.0
        return acc, wd, kap, vel_s.copy()

    accs, wds, kaps, xks = [], [], [], []
    a, wd, kap, xk = derivs(rot, om, np.zeros((n, 3)), vel, u, tau)
    accs.append(a); wds.append(wd); kaps.append(kap); xks.append(xk)
    for c in (0.5 * dt, 0.5 * dt, dt):
        pos_s = pos + c * xks[-1]
        vel_s = vel + c * accs[-1]
        om_s = om + c * wds[-1]
        sig_s = c * kaps[-1]
        rot_s = np.array([rot[i] @ so3.so3_exp(sig_s[i]) for i in range(n)])
        if zoh:
            u_s, tau_s = u, tau
        else:
            u_s, tau_s = _raw_controls(pos_s, vel_s, rot_s, om_s, graph, law,
                                       gains, m, J, draw, update_idx)
        a, wd, kap, xk = derivs(rot_s, om_s, sig_s, vel_s, u_s, tau_s)
        accs.append(a); wds.append(wd); kaps.append(kap); xks.append(xk)

    def combine(slopes):
        return dt * (slopes[0] + 2.0 * slopes[1] + 2.0 * slopes[2] + slopes[3]) / 6.0

    pos_new = pos + combine(xks)
    vel_new = vel + combine(accs)
    om_new = om + combine(wds)
    sig = combine(kaps)
    if not (np.all(np.isfinite(pos_new)) and np.all(np.isfinite(vel_new))
            and np.all(np.isfinite(om_new))):
        raise NumericalAbort(step=0, t=0.0)
    new_states = []
    for i in range(n):
        R_new = so3.renormalize(rot[i] @ so3.so3_exp(sig[i]))
        new_states.append(VehicleState(pos_new[i], vel_new[i], R_new, om_new[i]))
    return new_states, controls


def run(params, initial, world: WorldConfig, graph: SensorDigraph,
        law: ConsensusLaw, gains: ControlGains, sim: SimConfig,
        check_preconditions: bool = True, controlled: bool = True) -> Trajectory:
    """Integrate the full closed loop; deterministic for fixed inputs + seed."""
    n = graph.n
    if len(params) != n or len(initial) != n:
        raise ValueError(f"expected {n} vehicles to match the digraph")
    law.validate_against(graph)
    if check_preconditions:
        reachable, _ = graph.has_globally_reachable_node()
        if not reachable:
            warnings.warn("digraph has no globally reachable node; rendezvous is not guaranteed",
                          stacklevel=2)
        if n >= 2 and not certify(build_relative_closed_loop(law, graph)):
            warnings.warn("consensus law failed Hurwitz certification; running anyway",
                          stacklevel=2)

    n_steps = sim.n_steps
    if abs(n_steps * sim.dt - sim.t_final) > 1e-9 * max(1.0, sim.t_final):
        raise ValueError("t_final must be an integer multiple of dt")
    K = n_steps // sim.record_every + 1

    if sim.disturbance is not None:
        steps_per_update = max(1, int(round(1.0 / (sim.disturbance.update_hz * sim.dt))))
        n_updates = n_steps // steps_per_update + 1
        sched = build_schedule(sim.disturbance, sim.seed, n, n_updates)
        dF, dT, dG = sched.force, sched.torque, sched.gyro
        dRotM, dScale = sched.f_rotation, sched.f_scale
    else:
        steps_per_update = 0
        dF = np.zeros((1, n, 3))
        dT = np.zeros((1, n, 3))
        dG = np.zeros((1, n, 3))
        dRotM = np.broadcast_to(np.eye(3), (1, n, 3, 3)).copy()
        dScale = np.ones((1, n))

    pos = np.array([s.x for s in initial])
    vel = np.array([s.v for s in initial])
    rot = np.array([s.R for s in initial])
    om = np.array([s.w_body for s in initial])
    m = np.array([p.m for p in params])
    J = np.array([p.J for p in params])
    Jinv = np.array([p.J_inv for p in params])
    ptr, idx, a_w, b_w = _graph_csr(graph, law)

    rec_t = np.empty(K)
    rec_pos = np.empty((K, n, 3))
    rec_vel = np.empty((K, n, 3))
    rec_rot = np.empty((K, n, 3, 3))
    rec_om = np.empty((K, n, 3))
    rec_u = np.empty((K, n))
    rec_tau = np.empty((K, n, 3))

    bad = _kernels.simulate(pos, vel, rot, om, m, J, Jinv,
                            ptr, idx, a_w, b_w, gains.k1, gains.k2,
                            world.gravity[0], world.gravity[1], world.gravity[2],
                            sim.dt, n_steps, sim.record_every, sim.zoh, controlled,
                            steps_per_update, dF, dT, dG, dRotM, dScale,
                            rec_t, rec_pos, rec_vel, rec_rot, rec_om, rec_u, rec_tau)
    if bad >= 0:
        raise NumericalAbort(step=int(bad), t=float(bad * sim.dt))

    meta = {"dt": sim.dt, "t_final": sim.t_final, "seed": sim.seed,
            "record_every": sim.record_every, "zoh": sim.zoh,
            "disturbed": sim.disturbance is not None,
            "k1": gains.k1, "k2": gains.k2}
    return Trajectory(t=rec_t, pos=rec_pos, vel=rec_vel, rot=rec_rot,
                      omega=rec_om, u=rec_u, tau=rec_tau, meta=meta)


def run_free(params, initial, world: WorldConfig, sim: SimConfig) -> Trajectory:
    """Integrate uncontrolled rigid bodies (u = 0, tau = 0) on the same path.

    Backs the conservation and attitude-drift checks: a free body keeps its
    rotational kinetic energy and inertial angular momentum.
    """
    n = len(params)
    graph = SensorDigraph(n, frozenset())
    law = ConsensusLaw(a={}, b={})
    gains = ControlGains(k1=2.0, k2=0.45)  # unused when controls are off
    return run(params, initial, world, graph, law, gains, sim,
               check_preconditions=False, controlled=False)
