"""Composite Lyapunov function, scale/shape split, and sampled constants.

For the certified consensus loop with V(X) = X^T P X, the monitored energy
is

    W = alpha * (sqrt(V) + V/2) + sum_i g_i^i . e3
        + 1/2 (w - w_ref)^T JJ (w - w_ref)

where g_i(X) is vehicle i's ideal consensus force, g_i^i = R_i^T g_i its
body-frame value, w_ref,i = k1 (g_i^i x e3), and JJ the block diagonal of
the inertia matrices. X = rho * theta splits into a scale rho = sqrt(V) and
a shape theta on the unit-V shell S1.

The saturation weight alpha must dominate

    alpha_star = sup_{theta in S1, R in SO(3)^n} sum_i |g_i^i(theta, R) . e3|

for W >= 0 to hold. alpha_star and the decrease-rate constants M1..M5 have
no closed forms; they are estimated by seeded Monte Carlo over the compact
domain S1 x SO(3)^n (homogeneity reduces all suprema to this shell). The
estimates are lower bounds of the true suprema and are reported as
estimates, never as certified bounds. Sampling uses a fixed batch size with
per-batch child seeds, so a longer run extends a shorter one and estimates
are nondecreasing in the sample count for a fixed seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .consensus import LyapunovForm, RelativeClosedLoop
from .control import ControlGains

_BATCH = 20_000
RHO_UNDEFINED = 1e-12


# ---------------------------------------------------------------------------
# closed-loop maps on relative coordinates

def g_inertial(rcl: RelativeClosedLoop, X: np.ndarray) -> np.ndarray:
    """Ideal consensus forces g_i(X), stacked (..., n, 3); linear in X."""
    return np.einsum("nik,...k->...ni", rcl.G, np.asarray(X, float))


def body_frame(R: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Apply R_i^T to each vehicle's vector; shapes (..., n, 3, 3), (..., n, 3)."""
    return np.einsum("...nja,...nj->...na", R, vecs)


def closed_loop_Xdot(rcl: RelativeClosedLoop, X: np.ndarray, R: np.ndarray) -> np.ndarray:
    """dX/dt under the actual thrust law u_i = -m_i g_i^i . e3.

    The relative acceleration of vehicle j against vehicle 1 is
    (g_j^j . e3) R_j e3 - (g_1^1 . e3) R_1 e3; masses cancel. Linear in X.
    """
    X = np.asarray(X, float)
    g_in = g_inertial(rcl, X)
    e3c = np.asarray(R, float)[..., :, 2]
    gz = np.einsum("...ni,...ni->...n", g_in, e3c)
    Xdot = np.empty_like(X)
    for j in range(2, rcl.n + 1):
        Xdot[..., rcl.x_slot(j)] = X[..., rcl.v_slot(j)]
        Xdot[..., rcl.v_slot(j)] = (gz[..., j - 1, None] * e3c[..., j - 1, :]
                                    - gz[..., 0, None] * e3c[..., 0, :])
    return Xdot


def h_inertial(rcl: RelativeClosedLoop, X: np.ndarray, R: np.ndarray) -> np.ndarray:
    """h_i(X, R) = d/dt g_i(X) along the closed loop, stacked (..., n, 3).

    Since g_i is linear, its drift is G_i applied to the closed-loop dX/dt;
    linear in X, so h_i(rho theta, R) = rho h_i(theta, R).
    """
    return g_inertial(rcl, closed_loop_Xdot(rcl, X, R))


# ---------------------------------------------------------------------------
# pointwise evaluation

@dataclass(frozen=True)
class MonitorConfig:
    alpha: float
    delta: float | None = None       # decrease-test threshold; calibrated when None
    epsilon: float = 0.25            # target rendezvous radius (m)
    varrho: float = 0.5              # size of the near-manifold exclusion set
    sample_count: int = 100_000

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not (0 < self.varrho < 1):
            raise ValueError("varrho must lie in (0, 1)")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")


@dataclass(frozen=True, eq=False)
class MonitorSample:
    V: float
    rho: float
    theta: np.ndarray | None   # None when rho < 1e-12 (outside the split's image)
    W_tran: float
    W_rot: float
    W: float
    omega_err: np.ndarray      # (n,) ||w_i - w_ref,i||
    gamma_dist: float          # max pairwise sqrt(|x_ij|^2 + |v_ij|^2)

    @property
    def theta_defined(self) -> bool:
        return self.theta is not None


def rho_theta(X: np.ndarray, P: np.ndarray) -> tuple:
    """Scale/shape split X = rho * theta with V(theta) = 1.

    Returns (rho, theta); theta is None at rho < 1e-12, mirroring that the
    origin lies outside the image of the splitting map.
    """
    X = np.asarray(X, float)
    rho = float(np.sqrt(X @ P @ X))
    if rho < RHO_UNDEFINED:
        return rho, None
    return rho, X / rho


def _pairwise_gamma_dist(rcl: RelativeClosedLoop, X: np.ndarray) -> np.ndarray:
    """max over pairs of sqrt(|x_ij|^2 + |v_ij|^2), batched over leading axes."""
    X = np.asarray(X, float)
    n = rcl.n
    rx = np.zeros(X.shape[:-1] + (n, 3))
    rv = np.zeros_like(rx)
    for j in range(2, n + 1):
        rx[..., j - 1, :] = X[..., rcl.x_slot(j)]
        rv[..., j - 1, :] = X[..., rcl.v_slot(j)]
    dx = rx[..., :, None, :] - rx[..., None, :, :]
    dv = rv[..., :, None, :] - rv[..., None, :, :]
    d2 = (dx ** 2).sum(axis=-1) + (dv ** 2).sum(axis=-1)
    return np.sqrt(d2.max(axis=(-2, -1)))


def eval_W(X: np.ndarray, R: np.ndarray, w: np.ndarray,
           rcl: RelativeClosedLoop, lyap: LyapunovForm,
           gains: ControlGains, params, alpha: float) -> MonitorSample:
    """One monitor sample at relative state X, attitudes R (n,3,3), rates w (n,3)."""
    X = np.asarray(X, float)
    R = np.asarray(R, float)
    w = np.asarray(w, float)
    V = float(lyap.value(X))
    rho = float(np.sqrt(max(V, 0.0)))
    theta = X / rho if rho >= RHO_UNDEFINED else None

    g_in = g_inertial(rcl, X)
    g_body = body_frame(R, g_in)
    gz = g_body[..., 2]
    w_ref = gains.k1 * np.cross(g_body, np.array([0.0, 0.0, 1.0]))
    dw = w - w_ref
    Jdw = np.einsum("nij,nj->ni", np.array([p.J for p in params]), dw)
    quad = 0.5 * float(np.einsum("ni,ni->", dw, Jdw))

    W_tran = rho + 0.5 * V
    W_rot = float(gz.sum()) + quad
    return MonitorSample(V=V, rho=rho, theta=theta,
                         W_tran=W_tran, W_rot=W_rot,
                         W=alpha * W_tran + W_rot,
                         omega_err=np.linalg.norm(dw, axis=-1),
                         gamma_dist=float(_pairwise_gamma_dist(rcl, X)))


# ---------------------------------------------------------------------------
# trajectory monitoring

@dataclass(eq=False)
class MonitorTrace:
    """Monitor quantities along a recorded trajectory (vectorized eval_W)."""
    t: np.ndarray
    V: np.ndarray
    rho: np.ndarray
    W_tran: np.ndarray
    W_rot: np.ndarray
    W: np.ndarray
    omega_err: np.ndarray   # (K, n)
    gamma_dist: np.ndarray  # (K,)
    alpha: float


def monitor_trajectory(traj, rcl: RelativeClosedLoop, lyap: LyapunovForm,
                       gains: ControlGains, params, alpha: float) -> MonitorTrace:
    X = rcl.relative_state(traj.pos, traj.vel)          # (K, d)
    R = traj.rot                                        # (K, n, 3, 3)
    V = lyap.value(X)
    rho = np.sqrt(np.maximum(V, 0.0))
    g_in = g_inertial(rcl, X)
    g_body = body_frame(R, g_in)
    gz = g_body[..., 2]
    w_ref = gains.k1 * np.cross(g_body, np.array([0.0, 0.0, 1.0]))
    dw = traj.omega - w_ref
    Jstack = np.array([p.J for p in params])
    quad = 0.5 * np.einsum("kni,nij,knj->k", dw, Jstack, dw)
    W_tran = rho + 0.5 * V
    W_rot = gz.sum(axis=-1) + quad
    return MonitorTrace(t=traj.t.copy(), V=V, rho=rho, W_tran=W_tran, W_rot=W_rot,
                        W=alpha * W_tran + W_rot,
                        omega_err=np.linalg.norm(dw, axis=-1),
                        gamma_dist=_pairwise_gamma_dist(rcl, X), alpha=alpha)


@dataclass(eq=False)
class DecreaseReport:
    """Intervals where W >= delta yet W increased across one record stride."""
    delta: float
    delta_calibrated: bool
    violations: list            # (t_start, t_end, W_start, increase)
    max_increase: float
    count: int
    count_after_first_record: int
    near_floor_increases: int   # W < delta intervals where W rose (informational)
    count_inside_exclusion: int  # increases inside the near-manifold set
    varrho: float
    records: int

    def to_dict(self) -> dict:
        return {"delta": self.delta, "delta_calibrated": self.delta_calibrated,
                "count": self.count,
                "count_after_first_record": self.count_after_first_record,
                "max_increase": self.max_increase,
                "near_floor_increases": self.near_floor_increases,
                "count_inside_exclusion": self.count_inside_exclusion,
                "varrho": self.varrho,
                "records": self.records,
                "violations": [list(v) for v in self.violations[:100]]}


def decrease_test(trace: MonitorTrace, config: MonitorConfig) -> DecreaseReport:
    """Finite-difference check of 'W above delta implies W decreasing'.

    When ``config.delta`` is None the threshold is calibrated as 1.05 times
    the largest W over the final fifth of the run (the observed steady-state
    level) and reported as such; the theory leaves delta arbitrary.

    Each rising interval is also classified against the near-manifold
    exclusion set {rho < varrho and |w - w_ref|^2 < varrho}, where monotone
    decrease is never promised; increases there localize the regime in which
    the stability is practical rather than asymptotic. Informational only.
    """
    W = trace.W
    K = W.shape[0]
    if config.delta is not None:
        delta = float(config.delta)
        calibrated = False
    else:
        tail = W[int(np.floor(0.8 * (K - 1))):]
        delta = 1.05 * float(tail.max())
        calibrated = True
    dW = np.diff(W)
    above = W[:-1] >= delta
    rising = dW > 0
    viol_idx = np.nonzero(above & rising)[0]
    violations = [(float(trace.t[k]), float(trace.t[k + 1]), float(W[k]), float(dW[k]))
                  for k in viol_idx]
    near_floor = int(np.count_nonzero(~above & rising))
    omega_err_sq = (trace.omega_err ** 2).sum(axis=1)
    inside = (trace.rho[:-1] < config.varrho) & (omega_err_sq[:-1] < config.varrho)
    return DecreaseReport(delta=delta, delta_calibrated=calibrated,
                          violations=violations,
                          max_increase=float(dW[viol_idx].max()) if viol_idx.size else 0.0,
                          count=len(violations),
                          count_after_first_record=int(np.count_nonzero(viol_idx >= 1)),
                          near_floor_increases=near_floor,
                          count_inside_exclusion=int(np.count_nonzero(rising & inside)),
                          varrho=config.varrho,
                          records=K)


# ---------------------------------------------------------------------------
# sampling estimators

def _shell_sampler(lyap: LyapunovForm):
    """Uniform sampler on the shell V = 1: unit sphere mapped through P^{-1/2}."""
    L = np.linalg.cholesky(lyap.P)  # P = L L^T, V(x) = |L^T x|^2

    def sample(rng: np.random.Generator, count: int) -> np.ndarray:
        z = rng.normal(size=(count, L.shape[0]))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return scipy.linalg.solve_triangular(L.T, z.T, lower=False).T

    return sample


def _haar_rotations(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """(count, n, 3, 3) Haar rotations from uniform unit quaternions."""
    q = rng.normal(size=(count, n, 4))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = np.moveaxis(q, -1, 0)
    R = np.empty((count, n, 3, 3))
    R[..., 0, 0] = 1 - 2 * (y * y + z * z)
    R[..., 0, 1] = 2 * (x * y - w * z)
    R[..., 0, 2] = 2 * (x * z + w * y)
    R[..., 1, 0] = 2 * (x * y + w * z)
    R[..., 1, 1] = 1 - 2 * (x * x + z * z)
    R[..., 1, 2] = 2 * (y * z - w * x)
    R[..., 2, 0] = 2 * (x * z - w * y)
    R[..., 2, 1] = 2 * (y * z + w * x)
    R[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def _batches(sample_count: int, seed: int):
    n_batches = -(-sample_count // _BATCH)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    done = 0
    for b in range(n_batches):
        count = min(_BATCH, sample_count - done)
        done += count
        yield np.random.Generator(np.random.Philox(children[b])), count


@dataclass(eq=False)
class AlphaStarEstimate:
    value: float
    sample_count: int
    seed: int
    witness_theta: np.ndarray
    witness_R: np.ndarray

    def to_dict(self) -> dict:
        return {"alpha_star": self.value, "sample_count": self.sample_count,
                "seed": self.seed, "witness_theta": self.witness_theta.tolist(),
                "witness_R": self.witness_R.tolist(),
                "note": "sampled lower bound of the supremum, not a certified bound"}


def estimate_alpha_star(rcl: RelativeClosedLoop, lyap: LyapunovForm,
                        sample_count: int, seed: int) -> AlphaStarEstimate:
    """Sampled sup of sum_i |g_i^i(theta, R) . e3| over S1 x SO(3)^n."""
    if rcl.n < 2:
        raise ValueError("alpha_star needs at least two vehicles")
    sample_shell = _shell_sampler(lyap)
    best = -np.inf
    w_theta = None
    w_R = None
    for rng, count in _batches(sample_count, seed):
        theta = sample_shell(rng, count)
        R = _haar_rotations(rng, count, rcl.n)
        g_in = g_inertial(rcl, theta)
        gz = np.einsum("sni,sni->sn", g_in, R[..., :, 2])
        vals = np.abs(gz).sum(axis=1)
        k = int(vals.argmax())
        if vals[k] > best:
            best = float(vals[k])
            w_theta = theta[k].copy()
            w_R = R[k].copy()
    return AlphaStarEstimate(value=best, sample_count=sample_count, seed=seed,
                             witness_theta=w_theta, witness_R=w_R)


@dataclass(eq=False)
class ConstantsEstimate:
    """Sampled decrease-rate constants; M2 is exact, the rest lower bounds."""
    M1: float
    M2: float
    M3: float
    M4: float
    M5: float
    sample_count: int
    seed: int
    witnesses: dict

    def to_dict(self) -> dict:
        wit = {}
        for name, w in self.witnesses.items():
            wit[name] = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                         for k, v in w.items()}
        return {"M1": self.M1, "M2": self.M2, "M3": self.M3, "M4": self.M4,
                "M5": self.M5, "sample_count": self.sample_count,
                "seed": self.seed, "witnesses": wit,
                "note": "M2 exact; others are sampled lower bounds of maxima"}


def estimate_M_constants(rcl: RelativeClosedLoop, lyap: LyapunovForm, params,
                         sample_count: int, seed: int) -> ConstantsEstimate:
    """Estimate M1, M3, M4, M5 by sampling S1 x SO(3)^n; M2 in closed form.

        M1 = (n-1)/2 * max_{theta, j>=2} |dV/dv_1j(theta)|
        M2 = lambda_min(Q) / (2 lambda_max(P))        [exact]
        M3 = n * max_{theta,R,i} |h_i^i(theta, R) . e3|
        M4 = max_{theta,R,i} k_i(theta, R)^2 / 2,
             k_i = |g_i^i x e3| + |J_i (h_i^i x e3)|
        M5 = max_{theta,R} sum_i |g_i^i x e3|
    """
    if rcl.n < 2:
        raise ValueError("constants need at least two vehicles")
    n = rcl.n
    P, Q = lyap.P, lyap.Q
    M2 = float(np.linalg.eigvalsh(Q).min() / (2.0 * np.linalg.eigvalsh(P).max()))
    Jstack = np.array([p.J for p in params])
    sample_shell = _shell_sampler(lyap)

    best = {"M1": -np.inf, "M3": -np.inf, "M4": -np.inf, "M5": -np.inf}
    wit = {name: {} for name in best}

    for rng, count in _batches(sample_count, seed):
        theta = sample_shell(rng, count)
        R = _haar_rotations(rng, count, n)

        # M1: gradient slices of V at theta, no rotation dependence
        dV = 2.0 * theta @ P
        vj = np.stack([np.linalg.norm(dV[:, rcl.v_slot(j)], axis=1)
                       for j in range(2, n + 1)], axis=1)  # (count, n-1)
        flat = vj.argmax()
        k, j = np.unravel_index(flat, vj.shape)
        cand = vj[k, j] * (n - 1) / 2.0
        if cand > best["M1"]:
            best["M1"] = float(cand)
            wit["M1"] = {"value": float(cand), "theta": theta[k].copy(), "j": int(j + 2)}

        g_in = g_inertial(rcl, theta)
        g_body = body_frame(R, g_in)
        h_in = h_inertial(rcl, theta, R)
        h_body = body_frame(R, h_in)
        gperp = np.hypot(g_body[..., 0], g_body[..., 1])      # |g_i^i x e3|
        hz = np.abs(h_body[..., 2])
        hxe3 = np.stack([h_body[..., 1], -h_body[..., 0], np.zeros_like(hz)], axis=-1)
        Jh = np.einsum("nij,snj->sni", Jstack, hxe3)
        k_i = gperp + np.linalg.norm(Jh, axis=-1)

        for name, grid, factor in (("M3", hz, float(n)), ("M4", 0.5 * k_i ** 2, 1.0)):
            flat = grid.argmax()
            k, i = np.unravel_index(flat, grid.shape)
            cand = factor * grid[k, i]
            if cand > best[name]:
                best[name] = float(cand)
                wit[name] = {"value": float(cand), "theta": theta[k].copy(),
                             "R": R[k].copy(), "vehicle": int(i + 1)}
        m5 = gperp.sum(axis=1)
        k = int(m5.argmax())
        if m5[k] > best["M5"]:
            best["M5"] = float(m5[k])
            wit["M5"] = {"value": float(m5[k]), "theta": theta[k].copy(), "R": R[k].copy()}

    wit["M2"] = {"value": M2, "exact": True}
    return ConstantsEstimate(M1=best["M1"], M2=M2, M3=best["M3"], M4=best["M4"],
                             M5=best["M5"], sample_count=sample_count, seed=seed,
                             witnesses=wit)


def sample_W_values(rcl: RelativeClosedLoop, lyap: LyapunovForm, params,
                    gains: ControlGains, alpha: float, sample_count: int,
                    seed: int, rho_range: tuple = (1e-3, 1e3),
                    omega_span: float = 2.0) -> np.ndarray:
    """W evaluated at random (rho theta, R, w_ref + ball) points.

    rho is log-uniform over rho_range and w sits within omega_span of the
    reference rate, the regime where the nonnegativity of W is tightest.
    """
    sample_shell = _shell_sampler(lyap)
    Jstack = np.array([p.J for p in params])
    out = np.empty(sample_count)
    done = 0
    for rng, count in _batches(sample_count, seed):
        theta = sample_shell(rng, count)
        R = _haar_rotations(rng, count, rcl.n)
        rho = np.exp(rng.uniform(np.log(rho_range[0]), np.log(rho_range[1]), size=count))
        g_in = g_inertial(rcl, theta)
        g_body = body_frame(R, g_in)
        gz_theta = g_body[..., 2].sum(axis=1)
        # w = w_ref + bounded perturbation
        pert = rng.normal(size=(count, rcl.n, 3))
        pert /= np.linalg.norm(pert, axis=-1, keepdims=True)
        pert *= rng.uniform(0.0, omega_span, size=(count, rcl.n, 1))
        dw = pert
        quad = 0.5 * np.einsum("sni,nij,snj->s", dw, Jstack, dw)
        W_tran = rho + 0.5 * rho ** 2
        out[done:done + count] = alpha * W_tran + rho * gz_theta + quad
        done += count
    return out
