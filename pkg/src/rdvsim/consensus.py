"""Double-integrator consensus law and its certification.

The per-vehicle desired acceleration is

    f_i = sum_{j in N_i} a_ij * x_ij + b_ij * v_ij

with x_ij = x_j - x_i, v_ij = v_j - v_i. Certification checks that the
closed loop expressed in coordinates relative to vehicle 1 is Hurwitz, and
a quadratic Lyapunov matrix P is synthesized from A^T P + P A = -Q.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .digraph import SensorDigraph

# Eigenvalues must sit strictly left of -HURWITZ_MARGIN so the boolean is
# robust to eigensolver round-off.
HURWITZ_MARGIN = 1e-10

LYAP_RESIDUAL_TOL = 1e-8


class EigenSolverError(RuntimeError):
    """Eigenvalue iteration failed; distinct from a clean 'not Hurwitz'."""


@dataclass(frozen=True)
class ConsensusLaw:
    """Per-edge gains a_ij (1/s^2) and b_ij (1/s), keyed by edge (i, j)."""
    a: dict
    b: dict

    def __post_init__(self):
        object.__setattr__(self, "a", dict(self.a))
        object.__setattr__(self, "b", dict(self.b))
        for table, name in ((self.a, "a"), (self.b, "b")):
            for k, v in table.items():
                if not np.isfinite(v):
                    raise ValueError(f"gain {name}[{k}] is not finite")
        if set(self.a) != set(self.b):
            raise ValueError("a and b must be keyed by the same edge set")

    @classmethod
    def ren_atkins(cls, g: SensorDigraph, a: float, gamma: float) -> "ConsensusLaw":
        """Uniform special case b_ij = gamma * a_ij on every edge of g."""
        return cls(a={e: a for e in g.edges}, b={e: gamma * a for e in g.edges})

    def validate_against(self, g: SensorDigraph) -> None:
        if set(self.a) != set(g.edges):
            raise ValueError("law gains are not keyed exactly by the digraph edge set")


def eval_f(law: ConsensusLaw, g: SensorDigraph, i: int, y_i) -> np.ndarray:
    """Desired acceleration sum_j a_ij x_ij + b_ij v_ij (m/s^2).

    ``y_i`` is a sequence of (x_ij, v_ij) pairs ordered to match
    ``g.neighbors(i)``; linear and homogeneous in y_i.
    """
    nbrs = g.neighbors(i)
    if len(y_i) != len(nbrs):
        raise ValueError(f"vehicle {i} has {len(nbrs)} neighbors, got {len(y_i)} measurement pairs")
    f = np.zeros(3)
    for j, (x_ij, v_ij) in zip(nbrs, y_i):
        f += law.a[(i, j)] * np.asarray(x_ij, float) + law.b[(i, j)] * np.asarray(v_ij, float)
    return f


def _x_slot(j: int) -> slice:
    # X stacks (x_1j, v_1j) for j = 2..n
    s = 6 * (j - 2)
    return slice(s, s + 3)


def _v_slot(j: int) -> slice:
    s = 6 * (j - 2) + 3
    return slice(s, s + 3)


@dataclass(frozen=True)
class RelativeClosedLoop:
    """Closed loop of n ideal double integrators in relative coordinates.

    X = (x_12, v_12, ..., x_1n, v_1n), dX/dt = A X. ``G[i-1]`` maps X to the
    desired acceleration of vehicle i, so A's velocity rows are G_j - G_1.
    """
    n: int
    A: np.ndarray
    G: np.ndarray  # (n, 3, 6(n-1))

    @property
    def dim(self) -> int:
        return 6 * (self.n - 1)

    def x_slot(self, j: int) -> slice:
        return _x_slot(j)

    def v_slot(self, j: int) -> slice:
        return _v_slot(j)

    def relative_state(self, pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
        """Pack absolute per-vehicle (..., n, 3) arrays into X (..., 6(n-1))."""
        pos = np.asarray(pos, float)
        vel = np.asarray(vel, float)
        X = np.empty(pos.shape[:-2] + (self.dim,))
        for j in range(2, self.n + 1):
            X[..., _x_slot(j)] = pos[..., j - 1, :] - pos[..., 0, :]
            X[..., _v_slot(j)] = vel[..., j - 1, :] - vel[..., 0, :]
        return X


def build_relative_closed_loop(law: ConsensusLaw, g: SensorDigraph) -> RelativeClosedLoop:
    """Assemble A (and the per-vehicle force maps G) from the law and digraph.

    Gravity never enters: a common acceleration cancels from every relative
    coordinate, so the matrix depends on the gains and edges alone.
    """
    law.validate_against(g)
    n = g.n
    d = 6 * (n - 1)
    G = np.zeros((n, 3, d))
    for (i, j) in g.edges:
        a = law.a[(i, j)]
        b = law.b[(i, j)]
        for k in range(3):
            if j != 1:
                G[i - 1, k, 6 * (j - 2) + k] += a
                G[i - 1, k, 6 * (j - 2) + 3 + k] += b
            if i != 1:
                G[i - 1, k, 6 * (i - 2) + k] -= a
                G[i - 1, k, 6 * (i - 2) + 3 + k] -= b
    A = np.zeros((d, d))
    for j in range(2, n + 1):
        A[_x_slot(j), _v_slot(j)] = np.eye(3)
        A[_v_slot(j), :] = G[j - 1] - G[0]
    return RelativeClosedLoop(n=n, A=A, G=G)


def certify(rcl: RelativeClosedLoop) -> bool:
    """True iff every eigenvalue of A has real part < -1e-10."""
    try:
        ev = np.linalg.eigvals(rcl.A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver failed on the {rcl.dim}x{rcl.dim} relative matrix") from exc
    return bool(np.all(ev.real < -HURWITZ_MARGIN))


def slowest_decay_rate(rcl: RelativeClosedLoop) -> float:
    """|Re| of the eigenvalue closest to the imaginary axis (must be Hurwitz)."""
    ev = np.linalg.eigvals(rcl.A)
    return float(-ev.real.max())


@dataclass(frozen=True)
class LyapunovForm:
    """P > 0 with A^T P + P A = -Q for the certified relative closed loop."""
    P: np.ndarray
    Q: np.ndarray

    def value(self, X: np.ndarray) -> np.ndarray:
        """V(X) = X^T P X, batched over leading axes."""
        X = np.asarray(X, float)
        return np.einsum("...i,ij,...j->...", X, self.P, X)


def synthesize_P(rcl: RelativeClosedLoop, Q: np.ndarray | None = None) -> LyapunovForm:
    """Solve A^T P + P A = -Q for the unique symmetric P > 0.

    Q defaults to the identity. Raises if A is not Hurwitz (no positive
    definite solution exists) or if the solver residual exceeds 1e-8.
    """
    d = rcl.dim
    Q = np.eye(d) if Q is None else np.asarray(Q, float)
    if Q.shape != (d, d) or not np.allclose(Q, Q.T):
        raise ValueError("Q must be symmetric with the dimensions of A")
    if np.linalg.eigvalsh(Q).min() <= 0:
        raise ValueError("Q must be positive definite")
    if not certify(rcl):
        raise ValueError("relative closed loop is not Hurwitz; refusing to synthesize P")
    P = scipy.linalg.solve_continuous_lyapunov(rcl.A.T, -Q)
    P = 0.5 * (P + P.T)
    resid = np.linalg.norm(rcl.A.T @ P + P @ rcl.A + Q)
    if resid > LYAP_RESIDUAL_TOL:
        raise RuntimeError(f"Lyapunov residual {resid:.3e} exceeds {LYAP_RESIDUAL_TOL}")
    if np.linalg.eigvalsh(P).min() <= 0:
        raise RuntimeError("solved P is not positive definite")
    return LyapunovForm(P=P, Q=Q)
