"""Trajectory CSV schema and (de)serialization.

Column order: t, then per vehicle i (1-based):
x{i}, y{i}, z{i}, vx{i}, vy{i}, vz{i}, R{i}_11..R{i}_33 (row-major),
wx{i}, wy{i}, wz{i}, u{i}, taux{i}, tauy{i}, tauz{i}.

Values are written with %.17g so files round-trip exactly and identical runs
produce byte-identical output.
"""
from __future__ import annotations

import numpy as np

from .engine import Trajectory

_PER_VEHICLE = 22


def csv_columns(n: int) -> list:
    cols = ["t"]
    for i in range(1, n + 1):
        cols += [f"x{i}", f"y{i}", f"z{i}", f"vx{i}", f"vy{i}", f"vz{i}"]
        cols += [f"R{i}_{r}{c}" for r in (1, 2, 3) for c in (1, 2, 3)]
        cols += [f"wx{i}", f"wy{i}", f"wz{i}", f"u{i}", f"taux{i}", f"tauy{i}", f"tauz{i}"]
    return cols


def trajectory_matrix(traj: Trajectory) -> np.ndarray:
    K, n = traj.n_records, traj.n
    out = np.empty((K, 1 + _PER_VEHICLE * n))
    out[:, 0] = traj.t
    for i in range(n):
        base = 1 + _PER_VEHICLE * i
        out[:, base:base + 3] = traj.pos[:, i]
        out[:, base + 3:base + 6] = traj.vel[:, i]
        out[:, base + 6:base + 15] = traj.rot[:, i].reshape(K, 9)
        out[:, base + 15:base + 18] = traj.omega[:, i]
        out[:, base + 18] = traj.u[:, i]
        out[:, base + 19:base + 22] = traj.tau[:, i]
    return out


def write_trajectory_csv(traj: Trajectory, path) -> None:
    mat = trajectory_matrix(traj)
    header = ",".join(csv_columns(traj.n))
    np.savetxt(path, mat, fmt="%.17g", delimiter=",", header=header, comments="")


def read_trajectory_csv(path) -> Trajectory:
    with open(path) as f:
        header = f.readline().strip()
    cols = header.split(",")
    if not cols or cols[0] != "t" or (len(cols) - 1) % _PER_VEHICLE != 0:
        raise ValueError(f"{path}: header does not match the trajectory CSV schema")
    n = (len(cols) - 1) // _PER_VEHICLE
    if cols != csv_columns(n):
        raise ValueError(f"{path}: column names do not match the trajectory CSV schema")
    mat = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if mat.shape[1] != len(cols):
        raise ValueError(f"{path}: row width {mat.shape[1]} != header width {len(cols)}")
    K = mat.shape[0]
    pos = np.empty((K, n, 3))
    vel = np.empty((K, n, 3))
    rot = np.empty((K, n, 3, 3))
    omega = np.empty((K, n, 3))
    u = np.empty((K, n))
    tau = np.empty((K, n, 3))
    for i in range(n):
        base = 1 + _PER_VEHICLE * i
        pos[:, i] = mat[:, base:base + 3]
        vel[:, i] = mat[:, base + 3:base + 6]
        rot[:, i] = mat[:, base + 6:base + 15].reshape(K, 3, 3)
        omega[:, i] = mat[:, base + 15:base + 18]
        u[:, i] = mat[:, base + 18]
        tau[:, i] = mat[:, base + 19:base + 22]
    return Trajectory(t=mat[:, 0], pos=pos, vel=vel, rot=rot, omega=omega,
                      u=u, tau=tau, meta={"source": str(path)})
