"""Rotation-matrix primitives: hat map, Rodrigues exponential, SO(3) repair.

Attitudes are stored as plain 3x3 numpy arrays throughout the package.
"""
from __future__ import annotations

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

# Membership tolerance: loose enough to survive long integrations, tight
# enough that an integrator bug trips it.
ORTHO_TOL = 1e-9

# Below this angle the Rodrigues trig coefficients switch to their series
# expansions to avoid 0/0.
_SMALL_ANGLE = 1e-6


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix [v]x such that [v]x @ w == np.cross(v, w)."""
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -vz, vy],
                     [vz, 0.0, -vx],
                     [-vy, vx, 0.0]])


def so3_exp(w: np.ndarray) -> np.ndarray:
    """Rotation matrix exp([w]x) for a rotation vector w (radians).

    Closed-form Rodrigues formula; the two trig coefficients fall back to
    fourth-order series below ``1e-6`` rad.
    """
    w = np.asarray(w, dtype=float)
    a2 = float(w @ w)
    a = np.sqrt(a2)
    if a < _SMALL_ANGLE:
        c1 = 1.0 - a2 / 6.0
        c2 = 0.5 - a2 / 24.0
    else:
        c1 = np.sin(a) / a
        c2 = (1.0 - np.cos(a)) / a2
    K = hat(w)
    return np.eye(3) + c1 * K + c2 * (K @ K)


def is_rotation(R: np.ndarray, tol: float = ORTHO_TOL) -> bool:
    """True iff R is 3x3, finite, orthogonal and det(R) = 1 within tol."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    if np.linalg.norm(R.T @ R - np.eye(3)) > tol:
        return False
    return abs(float(np.linalg.det(R)) - 1.0) <= tol


def rotation_defect(R: np.ndarray) -> float:
    """Frobenius norm of R^T R - I (0 for an exact rotation)."""
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def reorthonormalize(R: np.ndarray) -> np.ndarray:
    """Nearest rotation to R in the polar-decomposition (Frobenius) sense.

    Raises ValueError if the projection has non-positive determinant, which
    happens when R is not in the neighborhood of SO(3) (e.g. a reflection).
    """
    R = np.asarray(R, dtype=float)
    U, _, Vt = np.linalg.svd(R)
    out = U @ Vt
    if np.linalg.det(out) <= 0.0:
        raise ValueError("projection of the input has det <= 0; not a near-rotation")
    return out


def renormalize(R: np.ndarray) -> np.ndarray:
    """One Newton-Schulz sweep R(3I - R^T R)/2.

    Only valid for R already within ~1e-4 of orthogonal; used by the
    integrator to pin products of exact rotations to machine precision.
    """
    return R @ ((3.0 * np.eye(3) - R.T @ R) / 2.0)


def random_rotations(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Haar-uniform rotation matrices of the given leading shape.

    Uniform unit quaternions (normalized 4-d Gaussians), converted to
    matrices; scalar-first convention.
    """
    q = rng.normal(size=tuple(shape) + (4,))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = np.moveaxis(q, -1, 0)
    R = np.empty(tuple(shape) + (3, 3))
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
