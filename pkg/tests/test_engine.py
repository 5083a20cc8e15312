import numpy as np
import pytest

from rdvsim import (ConsensusLaw, ControlGains, NumericalAbort, SensorDigraph,
                    SimConfig, VehicleParams, VehicleState, WorldConfig,
                    random_rotations, run, run_free, step)
from rdvsim.disturbance import build_schedule
from rdvsim.scenario import run_scenario

J_REF = np.diag([0.13, 0.13, 0.04])
GAINS = ControlGains(k1=2.0, k2=0.45)


def test_coasting_step_is_exact():
    # no controls (single vehicle, no neighbors), zero rate: one step moves
    # x by exactly v*dt when v and dt are dyadic rationals
    g = SensorDigraph(1, frozenset())
    law = ConsensusLaw({}, {})
    p = [VehicleParams(m=3.0, J=J_REF)]
    v = np.array([1.5, -0.25, 3.0])
    dt = 2.0 ** -10
    st = [VehicleState(x=np.array([0.5, 2.0, -1.0]), v=v, R=np.eye(3), w_body=np.zeros(3))]
    traj = run(p, st, WorldConfig(), g, law, GAINS,
               SimConfig(dt=dt, t_final=dt, record_every=1), check_preconditions=False)
    assert np.array_equal(traj.pos[1, 0], st[0].x + v * dt)
    assert np.array_equal(traj.vel[1, 0], v)
    assert np.array_equal(traj.rot[1, 0], np.eye(3))
    assert np.array_equal(traj.omega[1, 0], np.zeros(3))
    assert traj.u[0, 0] == 0.0 and np.all(traj.tau[0, 0] == 0.0)


@pytest.fixture(scope="module")
def free_tumble():
    p = [VehicleParams(m=3.0, J=J_REF)]
    st = [VehicleState(x=np.zeros(3), v=np.zeros(3), R=np.eye(3),
                       w_body=np.array([1.3, -0.7, 2.1]))]
    return run_free(p, st, WorldConfig(), SimConfig(dt=1e-3, t_final=10.0, record_every=10))


def test_free_body_energy_conservation(free_tumble):
    KE = 0.5 * np.einsum("ki,ij,kj->k", free_tumble.omega[:, 0], J_REF, free_tumble.omega[:, 0])
    assert np.abs(KE - KE[0]).max() / KE[0] <= 1e-6


def test_free_body_momentum_conservation(free_tumble):
    H = np.einsum("kij,jl,kl->ki", free_tumble.rot[:, 0], J_REF, free_tumble.omega[:, 0])
    assert np.linalg.norm(H - H[0], axis=1).max() / np.linalg.norm(H[0]) <= 1e-6


def test_so3_drift_over_long_run(free_tumble):
    RtR = np.einsum("knji,knjl->knil", free_tumble.rot, free_tumble.rot)
    assert np.abs(RtR - np.eye(3)).max() <= 1e-8


def test_free_body_matches_adaptive_reference():
    # the full rigid-body flow against an independent high-order adaptive
    # integrator at rtol 1e-12 (not just the conserved quantities)
    from scipy.integrate import solve_ivp
    J = J_REF
    Jinv = np.linalg.inv(J)
    w0 = np.array([1.3, -0.7, 2.1])

    def rhs(t, y):
        R = y[:9].reshape(3, 3)
        w = y[9:]
        dR = R @ np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0.0]])
        dw = Jinv @ (-np.cross(w, J @ w))
        return np.concatenate([dR.ravel(), dw])

    sol = solve_ivp(rhs, (0.0, 10.0), np.concatenate([np.eye(3).ravel(), w0]),
                    rtol=1e-12, atol=1e-12, method="DOP853")
    p = [VehicleParams(m=3.0, J=J)]
    st = [VehicleState(x=np.zeros(3), v=np.zeros(3), R=np.eye(3), w_body=w0)]
    traj = run_free(p, st, WorldConfig(), SimConfig(dt=1e-3, t_final=10.0, record_every=10000))
    assert np.abs(traj.omega[-1, 0] - sol.y[9:, -1]).max() <= 1e-10
    assert np.abs(traj.rot[-1, 0] - sol.y[:9, -1].reshape(3, 3)).max() <= 1e-9


def test_rk4_self_convergence():
    # continuous-feedback variant against a dt/8 reference of itself;
    # halving dt should cut the end-state error ~16x (4th order)
    g = SensorDigraph(2, frozenset({(1, 2), (2, 1)}))
    law = ConsensusLaw.ren_atkins(g, 0.3, 30.0)
    p = [VehicleParams(m=3.0, J=J_REF), VehicleParams(m=3.2, J=1.2 * J_REF)]
    R0 = np.array([[1.0, 0, 0], [0, 0, -1.0], [0, 1.0, 0]])
    st = [VehicleState(x=np.array([0.0, -4, 3]), v=np.array([0.1, 0, -0.2]),
                       R=R0, w_body=np.array([0.3, -0.2, 0.5])),
          VehicleState(x=np.array([2.0, 3, -1]), v=np.zeros(3), R=np.eye(3),
                       w_body=np.array([-0.1, 0.4, 0.2]))]

    def endstate(dt):
        tr = run(p, st, WorldConfig(), g, law, GAINS,
                 SimConfig(dt=dt, t_final=2.0, record_every=int(round(2.0 / dt)), zoh=False),
                 check_preconditions=False)
        return np.concatenate([tr.pos[-1].ravel(), tr.vel[-1].ravel(),
                               tr.omega[-1].ravel(), tr.rot[-1].ravel()])

    ref = endstate(5e-4)
    e4 = np.linalg.norm(endstate(4e-3) - ref)
    e2 = np.linalg.norm(endstate(2e-3) - ref)
    assert 8.0 <= e4 / e2 <= 32.0


def test_single_vehicle_spin_down_matches_oracle():
    # no neighbors: f = 0, u = 0, tau = w x Jw - k1^2 k2 w. For a principal
    # z-spin the held torque is constant over each step and RK4 integrates it
    # exactly, so the sampled system is w_{k+1} = (1 - lam*dt) w_k.
    g = SensorDigraph(1, frozenset())
    law = ConsensusLaw({}, {})
    p = [VehicleParams(m=3.0, J=J_REF)]
    st = [VehicleState(x=np.zeros(3), v=np.zeros(3), R=np.eye(3),
                       w_body=np.array([0.0, 0.0, 1.0]))]
    dt = 1e-3
    lam = GAINS.k1 ** 2 * GAINS.k2 / J_REF[2, 2]
    traj = run(p, st, WorldConfig(), g, law, GAINS,
               SimConfig(dt=dt, t_final=0.2, record_every=1), check_preconditions=False)
    ks = np.arange(traj.n_records)
    oracle = (1.0 - lam * dt) ** ks
    assert np.allclose(traj.omega[:, 0, 2], oracle, rtol=1e-12, atol=1e-13)
    assert np.all(traj.u[:, 0] == 0.0)
    # continuous-feedback variant follows the exact exponential
    traj_c = run(p, st, WorldConfig(), g, law, GAINS,
                 SimConfig(dt=dt, t_final=0.2, record_every=1, zoh=False),
                 check_preconditions=False)
    assert np.allclose(traj_c.omega[:, 0, 2], np.exp(-lam * traj_c.t), rtol=1e-8)


def test_pair_at_rendezvous_stays():
    g = SensorDigraph(2, frozenset({(1, 2), (2, 1)}))
    law = ConsensusLaw.ren_atkins(g, 0.3, 30.0)
    p = [VehicleParams(m=3.0, J=J_REF)] * 2
    R2 = np.diag([1.0, -1.0, -1.0])
    st = [VehicleState(x=np.array([1.0, 2.0, 3.0]), v=np.array([0.3, 0, 0]),
                       R=np.eye(3), w_body=np.zeros(3)),
          VehicleState(x=np.array([1.0, 2.0, 3.0]), v=np.array([0.3, 0, 0]),
                       R=R2, w_body=np.zeros(3))]
    traj = run(p, st, WorldConfig(), g, law, GAINS,
               SimConfig(dt=1e-3, t_final=1.0, record_every=10))
    assert np.array_equal(traj.pos[:, 0], traj.pos[:, 1])
    assert np.array_equal(traj.vel[:, 0], traj.vel[:, 1])
    assert np.all(traj.u == 0.0)


def test_determinism_bit_identical(paper6):
    s = paper6.with_sim(t_final=1.0, seed=11)
    a = run_scenario(s)
    b = run_scenario(s)
    for name in ("pos", "vel", "rot", "omega", "u", "tau"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_gravity_invariance_of_relative_motion(paper5):
    sim = SimConfig(dt=1e-3, t_final=10.0, record_every=10)
    t0 = run(paper5.params, paper5.initial, WorldConfig(), paper5.graph,
             paper5.law, paper5.gains, sim)
    t1 = run(paper5.params, paper5.initial, WorldConfig(gravity=np.array([0, 0, -9.81])),
             paper5.graph, paper5.law, paper5.gains, sim)
    rel0 = t0.pos - t0.pos[:, :1]
    rel1 = t1.pos - t1.pos[:, :1]
    assert np.abs(rel0 - rel1).max() <= 1e-9
    assert np.abs(t0.rot - t1.rot).max() <= 1e-9
    assert np.abs(t0.u - t1.u).max() <= 1e-9
    assert np.abs(t0.tau - t1.tau).max() <= 1e-9


def test_frame_invariance_of_controls(paper5, rng):
    sim = SimConfig(dt=1e-3, t_final=10.0, record_every=10)
    base = run(paper5.params, paper5.initial, paper5.world, paper5.graph,
               paper5.law, paper5.gains, sim)
    R0 = random_rotations(rng)
    rotated = [VehicleState(x=R0 @ s.x, v=R0 @ s.v, R=R0 @ s.R, w_body=s.w_body)
               for s in paper5.initial]
    moved = run(paper5.params, rotated, paper5.world, paper5.graph,
                paper5.law, paper5.gains, sim)
    assert np.abs(base.u - moved.u).max() <= 1e-9
    tau_n0 = np.linalg.norm(base.tau, axis=2)
    tau_n1 = np.linalg.norm(moved.tau, axis=2)
    assert np.abs(tau_n0 - tau_n1).max() <= 1e-9


def test_recorded_rotations_stay_valid(traj5_60):
    RtR = np.einsum("knji,knjl->knil", traj5_60.rot, traj5_60.rot)
    assert np.abs(RtR - np.eye(3)).max() <= 1e-9
    det = np.linalg.det(traj5_60.rot)
    assert np.abs(det - 1.0).max() <= 1e-9


def test_kernel_matches_reference_step(paper5):
    states = paper5.initial
    for _ in range(10):
        states, _ = step(states, paper5.params, paper5.world, paper5.graph,
                         paper5.law, paper5.gains, paper5.sim.dt)
    traj = run(paper5.params, paper5.initial, paper5.world, paper5.graph,
               paper5.law, paper5.gains,
               SimConfig(dt=paper5.sim.dt, t_final=10 * paper5.sim.dt, record_every=10))
    assert np.abs(traj.pos[-1] - np.array([s.x for s in states])).max() <= 1e-13
    assert np.abs(traj.vel[-1] - np.array([s.v for s in states])).max() <= 1e-13
    assert np.abs(traj.omega[-1] - np.array([s.w_body for s in states])).max() <= 1e-13
    assert np.abs(traj.rot[-1] - np.array([s.R for s in states])).max() <= 1e-13


def test_kernel_matches_reference_step_disturbed(paper6):
    # 250 steps at 10 Hz hold -> three different update rows exercise the
    # zero-order-hold indexing on both paths
    spec = paper6.sim.disturbance
    dt = 1e-3
    n_steps = 250
    spu = int(round(1.0 / (spec.update_hz * dt)))
    sched = build_schedule(spec, seed=5, n=5, n_updates=n_steps // spu + 1)
    states = paper6.initial
    for k in range(n_steps):
        states, _ = step(states, paper6.params, paper6.world, paper6.graph,
                         paper6.law, paper6.gains, dt, draw=sched,
                         update_idx=min(k // spu, sched.force.shape[0] - 1))
    traj = run(paper6.params, paper6.initial, paper6.world, paper6.graph,
               paper6.law, paper6.gains,
               SimConfig(dt=dt, t_final=n_steps * dt, record_every=n_steps,
                         seed=5, disturbance=spec))
    assert np.abs(traj.pos[-1] - np.array([s.x for s in states])).max() <= 1e-12
    assert np.abs(traj.omega[-1] - np.array([s.w_body for s in states])).max() <= 1e-12


def test_numerical_abort_reports_step(paper5):
    # k1=8, k2=1.8 drives the inner-loop damping rate past the sampled-data
    # stability limit at dt=1e-3; the run must abort with a step index, not NaN out
    with pytest.raises(NumericalAbort) as exc:
        run_scenario(paper5.with_gains(8.0, 1.8).with_sim(t_final=5.0))
    assert exc.value.step > 0


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(dt=0.02)
    with pytest.raises(ValueError):
        SimConfig(dt=1e-3, t_final=1e-4)
    with pytest.raises(ValueError):
        SimConfig(record_every=0)
    with pytest.raises(ValueError):
        SimConfig(seed=-1)


def test_time_grid_uniform(traj5_60):
    dt_rec = np.diff(traj5_60.t)
    assert np.all(dt_rec > 0)
    assert np.allclose(dt_rec, 10 * 1e-3, atol=1e-12)


def test_unreachable_graph_warns():
    g = SensorDigraph(2, frozenset())
    law = ConsensusLaw({}, {})
    p = [VehicleParams(m=1.0, J=J_REF)] * 2
    st = [VehicleState(x=np.zeros(3), v=np.zeros(3), R=np.eye(3), w_body=np.zeros(3)),
          VehicleState(x=np.ones(3), v=np.zeros(3), R=np.eye(3), w_body=np.zeros(3))]
    with pytest.warns(UserWarning):
        run(p, st, WorldConfig(), g, law, GAINS, SimConfig(dt=1e-3, t_final=0.01, record_every=1))
