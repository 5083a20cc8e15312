"""Compiled fixed-step integrator for the n-vehicle closed loop.

The hot loop is a Lie-group Runge-Kutta step (classical 4-stage tableau on
positions, velocities and body rates; attitudes advanced multiplicatively by
the exponential of the dexpinv-corrected, RK-averaged body rate, then pinned
back to orthonormality with one Newton-Schulz sweep). Controls are held over
each step by default; the continuous variant re-evaluates them at every
stage and exists for convergence studies.

Everything here mirrors the reference implementation in ``engine.py``; a
test pins the two paths against each other.
"""
import numpy as np
from numba import njit

_SMALL_ANGLE = 1e-6


@njit(cache=True, inline="always")
def _exp_into(sx, sy, sz, out):
    # Rodrigues formula, K^2 expanded via K^2 = s s^T - |s|^2 I.
    a2 = sx * sx + sy * sy + sz * sz
    a = np.sqrt(a2)
    if a < _SMALL_ANGLE:
        c1 = 1.0 - a2 / 6.0
        c2 = 0.5 - a2 / 24.0
    else:
        c1 = np.sin(a) / a
        c2 = (1.0 - np.cos(a)) / a2
    out[0, 0] = 1.0 + c2 * (sx * sx - a2)
    out[0, 1] = -c1 * sz + c2 * sx * sy
    out[0, 2] = c1 * sy + c2 * sx * sz
    out[1, 0] = c1 * sz + c2 * sx * sy
    out[1, 1] = 1.0 + c2 * (sy * sy - a2)
    out[1, 2] = -c1 * sx + c2 * sy * sz
    out[2, 0] = -c1 * sy + c2 * sx * sz
    out[2, 1] = c1 * sx + c2 * sy * sz
    out[2, 2] = 1.0 + c2 * (sz * sz - a2)


@njit(cache=True, inline="always")
def _mul33_into(A, B, out):
    for r in range(3):
        for c in range(3):
            out[r, c] = A[r, 0] * B[0, c] + A[r, 1] * B[1, c] + A[r, 2] * B[2, c]


@njit(cache=True, inline="always")
def _renorm_into(R, out):
    # One Newton-Schulz sweep R (3I - R^T R)/2; R is already near-orthogonal.
    g00 = R[0, 0] * R[0, 0] + R[1, 0] * R[1, 0] + R[2, 0] * R[2, 0]
    g11 = R[0, 1] * R[0, 1] + R[1, 1] * R[1, 1] + R[2, 1] * R[2, 1]
    g22 = R[0, 2] * R[0, 2] + R[1, 2] * R[1, 2] + R[2, 2] * R[2, 2]
    g01 = R[0, 0] * R[0, 1] + R[1, 0] * R[1, 1] + R[2, 0] * R[2, 1]
    g02 = R[0, 0] * R[0, 2] + R[1, 0] * R[1, 2] + R[2, 0] * R[2, 2]
    g12 = R[0, 1] * R[0, 2] + R[1, 1] * R[1, 2] + R[2, 1] * R[2, 2]
    c00 = 1.5 - 0.5 * g00
    c11 = 1.5 - 0.5 * g11
    c22 = 1.5 - 0.5 * g22
    c01 = -0.5 * g01
    c02 = -0.5 * g02
    c12 = -0.5 * g12
    for r in range(3):
        out[r, 0] = R[r, 0] * c00 + R[r, 1] * c01 + R[r, 2] * c02
        out[r, 1] = R[r, 0] * c01 + R[r, 1] * c11 + R[r, 2] * c12
        out[r, 2] = R[r, 0] * c02 + R[r, 1] * c12 + R[r, 2] * c22


@njit(cache=True)
def _controls(pos, vel, rot, om, m, J,
              nbr_ptr, nbr_idx, a_w, b_w, k1, k2,
              disturbed, dGrow, dRotrow, dScalerow, u, tau):
    """Feedback law for all vehicles from a frozen state snapshot.

    With disturbances on, the consensus force is rotated and scaled and the
    body rate seen by the controller carries the gyro error; the plant state
    itself is untouched here.
    """
    n = pos.shape[0]
    k12k2 = k1 * k1 * k2
    for i in range(n):
        sx = 0.0
        sy = 0.0
        sz = 0.0
        for e in range(nbr_ptr[i], nbr_ptr[i + 1]):
            j = nbr_idx[e]
            aw = a_w[e]
            bw = b_w[e]
            sx += aw * (pos[j, 0] - pos[i, 0]) + bw * (vel[j, 0] - vel[i, 0])
            sy += aw * (pos[j, 1] - pos[i, 1]) + bw * (vel[j, 1] - vel[i, 1])
            sz += aw * (pos[j, 2] - pos[i, 2]) + bw * (vel[j, 2] - vel[i, 2])
        # body frame: f = R_i^T s
        fx = rot[i, 0, 0] * sx + rot[i, 1, 0] * sy + rot[i, 2, 0] * sz
        fy = rot[i, 0, 1] * sx + rot[i, 1, 1] * sy + rot[i, 2, 1] * sz
        fz = rot[i, 0, 2] * sx + rot[i, 1, 2] * sy + rot[i, 2, 2] * sz
        wx = om[i, 0]
        wy = om[i, 1]
        wz = om[i, 2]
        if disturbed:
            s = dScalerow[i]
            M = dRotrow[i]
            tx = s * (M[0, 0] * fx + M[0, 1] * fy + M[0, 2] * fz)
            ty = s * (M[1, 0] * fx + M[1, 1] * fy + M[1, 2] * fz)
            tz = s * (M[2, 0] * fx + M[2, 1] * fy + M[2, 2] * fz)
            fx, fy, fz = tx, ty, tz
            wx += dGrow[i, 0]
            wy += dGrow[i, 1]
            wz += dGrow[i, 2]
        u[i] = -m[i] * fz
        Jwx = J[i, 0, 0] * wx + J[i, 0, 1] * wy + J[i, 0, 2] * wz
        Jwy = J[i, 1, 0] * wx + J[i, 1, 1] * wy + J[i, 1, 2] * wz
        Jwz = J[i, 2, 0] * wx + J[i, 2, 1] * wy + J[i, 2, 2] * wz
        # w x Jw
        c1x = wy * Jwz - wz * Jwy
        c1y = wz * Jwx - wx * Jwz
        c1z = wx * Jwy - wy * Jwx
        # (w x f) x e3 = (p_y, -p_x, 0) with p = w x f
        px = wy * fz - wz * fy
        py = wz * fx - wx * fz
        qx = py
        qy = -px
        Jqx = J[i, 0, 0] * qx + J[i, 0, 1] * qy
        Jqy = J[i, 1, 0] * qx + J[i, 1, 1] * qy
        Jqz = J[i, 2, 0] * qx + J[i, 2, 1] * qy
        # f x e3 = (fy, -fx, 0)
        tau[i, 0] = c1x - k1 * Jqx - k12k2 * (wx - k1 * fy)
        tau[i, 1] = c1y - k1 * Jqy - k12k2 * (wy + k1 * fx)
        tau[i, 2] = c1z - k1 * Jqz - k12k2 * wz


@njit(cache=True)
def _stage(rot_s, om_s, sig_s, vel_s, u, tau, dFrow, dTrow, disturbed,
           m, J, Jinv, gx, gy, gz, acc, wd, kap, xk):
    """Stage derivatives: translational/rotational slopes and the
    dexpinv-corrected body rate that advances the attitude coordinate."""
    n = om_s.shape[0]
    for i in range(n):
        inv_m = 1.0 / m[i]
        fnx = dFrow[i, 0] if disturbed else 0.0
        fny = dFrow[i, 1] if disturbed else 0.0
        fnz = dFrow[i, 2] if disturbed else 0.0
        acc[i, 0] = (-u[i] * rot_s[i, 0, 2] + fnx) * inv_m + gx
        acc[i, 1] = (-u[i] * rot_s[i, 1, 2] + fny) * inv_m + gy
        acc[i, 2] = (-u[i] * rot_s[i, 2, 2] + fnz) * inv_m + gz
        xk[i, 0] = vel_s[i, 0]
        xk[i, 1] = vel_s[i, 1]
        xk[i, 2] = vel_s[i, 2]
        wx = om_s[i, 0]
        wy = om_s[i, 1]
        wz = om_s[i, 2]
        Jwx = J[i, 0, 0] * wx + J[i, 0, 1] * wy + J[i, 0, 2] * wz
        Jwy = J[i, 1, 0] * wx + J[i, 1, 1] * wy + J[i, 1, 2] * wz
        Jwz = J[i, 2, 0] * wx + J[i, 2, 1] * wy + J[i, 2, 2] * wz
        tnx = dTrow[i, 0] if disturbed else 0.0
        tny = dTrow[i, 1] if disturbed else 0.0
        tnz = dTrow[i, 2] if disturbed else 0.0
        tx = tau[i, 0] + tnx - (wy * Jwz - wz * Jwy)
        ty = tau[i, 1] + tny - (wz * Jwx - wx * Jwz)
        tz = tau[i, 2] + tnz - (wx * Jwy - wy * Jwx)
        wd[i, 0] = Jinv[i, 0, 0] * tx + Jinv[i, 0, 1] * ty + Jinv[i, 0, 2] * tz
        wd[i, 1] = Jinv[i, 1, 0] * tx + Jinv[i, 1, 1] * ty + Jinv[i, 1, 2] * tz
        wd[i, 2] = Jinv[i, 2, 0] * tx + Jinv[i, 2, 1] * ty + Jinv[i, 2, 2] * tz
        # kappa = dexpinv(sig, w) = w + 0.5 sig x w + (1/12) sig x (sig x w)
        sx = sig_s[i, 0]
        sy = sig_s[i, 1]
        sz = sig_s[i, 2]
        cx = sy * wz - sz * wy
        cy = sz * wx - sx * wz
        cz = sx * wy - sy * wx
        dx = sy * cz - sz * cy
        dy = sz * cx - sx * cz
        dz = sx * cy - sy * cx
        kap[i, 0] = wx + 0.5 * cx + dx / 12.0
        kap[i, 1] = wy + 0.5 * cy + dy / 12.0
        kap[i, 2] = wz + 0.5 * cz + dz / 12.0


@njit(cache=True)
def simulate(pos, vel, rot, om, m, J, Jinv,
             nbr_ptr, nbr_idx, a_w, b_w, k1, k2,
             gx, gy, gz, dt, n_steps, record_every, zoh, controlled,
             steps_per_update, dF, dT, dG, dRotM, dScale,
             rec_t, rec_pos, rec_vel, rec_rot, rec_om, rec_u, rec_tau):
    """Run the closed loop in place; returns -1 or the first bad step index.

    State arrays are advanced in place. Rows of the rec_* arrays are filled
    at steps divisible by record_every, with the controls evaluated at the
    recorded instant. ``controlled=False`` zeroes both inputs (free rigid
    bodies), which backs the conservation checks.
    """
    n = pos.shape[0]
    disturbed = steps_per_update > 0
    n_updates = dF.shape[0]

    u = np.zeros(n)
    tau = np.zeros((n, 3))
    u_s = np.zeros(n)
    tau_s = np.zeros((n, 3))
    acc = np.empty((4, n, 3))
    wd = np.empty((4, n, 3))
    kap = np.empty((4, n, 3))
    xk = np.empty((4, n, 3))
    pos_s = np.empty((n, 3))
    vel_s = np.empty((n, 3))
    om_s = np.empty((n, 3))
    sig_s = np.zeros((n, 3))
    sig0 = np.zeros((n, 3))
    rot_s = np.empty((n, 3, 3))
    E = np.empty((3, 3))
    M = np.empty((3, 3))

    coeff = (0.5 * dt, 0.5 * dt, dt)
    rec_i = 0
    for step in range(n_steps + 1):
        if disturbed:
            uidx = min(step // steps_per_update, n_updates - 1)
        else:
            uidx = 0
        dFrow = dF[uidx]
        dTrow = dT[uidx]
        dGrow = dG[uidx]
        dRotrow = dRotM[uidx]
        dScalerow = dScale[uidx]

        if controlled:
            _controls(pos, vel, rot, om, m, J, nbr_ptr, nbr_idx, a_w, b_w,
                      k1, k2, disturbed, dGrow, dRotrow, dScalerow, u, tau)

        if step % record_every == 0 and rec_i < rec_t.shape[0]:
            rec_t[rec_i] = step * dt
            for i in range(n):
                for k in range(3):
                    rec_pos[rec_i, i, k] = pos[i, k]
                    rec_vel[rec_i, i, k] = vel[i, k]
                    rec_om[rec_i, i, k] = om[i, k]
                    rec_tau[rec_i, i, k] = tau[i, k]
                    for l in range(3):
                        rec_rot[rec_i, i, k, l] = rot[i, k, l]
                rec_u[rec_i, i] = u[i]
            rec_i += 1

        if step == n_steps:
            break

        # stage 1: current state, sigma = 0
        _stage(rot, om, sig0, vel, u, tau, dFrow, dTrow, disturbed,
               m, J, Jinv, gx, gy, gz, acc[0], wd[0], kap[0], xk[0])
        # stages 2..4
        for s in range(1, 4):
            c = coeff[s - 1]
            for i in range(n):
                for k in range(3):
                    pos_s[i, k] = pos[i, k] + c * xk[s - 1, i, k]
                    vel_s[i, k] = vel[i, k] + c * acc[s - 1, i, k]
                    om_s[i, k] = om[i, k] + c * wd[s - 1, i, k]
                    sig_s[i, k] = c * kap[s - 1, i, k]
                _exp_into(sig_s[i, 0], sig_s[i, 1], sig_s[i, 2], E)
                _mul33_into(rot[i], E, rot_s[i])
            if zoh or not controlled:
                _stage(rot_s, om_s, sig_s, vel_s, u, tau, dFrow, dTrow, disturbed,
                       m, J, Jinv, gx, gy, gz, acc[s], wd[s], kap[s], xk[s])
            else:
                _controls(pos_s, vel_s, rot_s, om_s, m, J, nbr_ptr, nbr_idx,
                          a_w, b_w, k1, k2, disturbed, dGrow, dRotrow,
                          dScalerow, u_s, tau_s)
                _stage(rot_s, om_s, sig_s, vel_s, u_s, tau_s, dFrow, dTrow, disturbed,
                       m, J, Jinv, gx, gy, gz, acc[s], wd[s], kap[s], xk[s])

        ok = True
        for i in range(n):
            for k in range(3):
                pos[i, k] += dt * (xk[0, i, k] + 2.0 * xk[1, i, k] + 2.0 * xk[2, i, k] + xk[3, i, k]) / 6.0
                vel[i, k] += dt * (acc[0, i, k] + 2.0 * acc[1, i, k] + 2.0 * acc[2, i, k] + acc[3, i, k]) / 6.0
                om[i, k] += dt * (wd[0, i, k] + 2.0 * wd[1, i, k] + 2.0 * wd[2, i, k] + wd[3, i, k]) / 6.0
                sig_s[i, k] = dt * (kap[0, i, k] + 2.0 * kap[1, i, k] + 2.0 * kap[2, i, k] + kap[3, i, k]) / 6.0
            _exp_into(sig_s[i, 0], sig_s[i, 1], sig_s[i, 2], E)
            _mul33_into(rot[i], E, M)
            _renorm_into(M, rot[i])
            for k in range(3):
                if not (np.isfinite(pos[i, k]) and np.isfinite(vel[i, k]) and np.isfinite(om[i, k])):
                    ok = False
        if not ok:
            return step
    return -1
