"""Control-effort and rendezvous metrics over a recorded trajectory.

Peaks are discrete maxima over the recorded grid; rms values are taken over
the whole run (no window is specified upstream, so the least arbitrary
reading is used and documented). The steady-state window is the final 20%
of the run by default.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Trajectory

STEADY_FRACTION = 0.2


@dataclass(eq=False)
class MetricsReport:
    peak_u: np.ndarray          # (n,) max_t |u_i|
    peak_tau: np.ndarray        # (n,) max_t ||tau_i||
    rms_u: np.ndarray           # (n,)
    rms_tau: np.ndarray         # (n,)
    max_peak_u: float
    max_peak_tau: float
    max_rms_u: float
    max_rms_tau: float
    steady_state_max_pairwise_distance: float
    terminal_speeds: np.ndarray  # (n,)
    steady_window: tuple         # (t_start, t_end)

    def to_dict(self) -> dict:
        return {
            "per_vehicle": {
                "peak_abs_u": self.peak_u.tolist(),
                "peak_tau_norm": self.peak_tau.tolist(),
                "rms_abs_u": self.rms_u.tolist(),
                "rms_tau_norm": self.rms_tau.tolist(),
            },
            "network": {
                "max_peak_abs_u": self.max_peak_u,
                "max_peak_tau_norm": self.max_peak_tau,
                "max_rms_abs_u": self.max_rms_u,
                "max_rms_tau_norm": self.max_rms_tau,
            },
            "steady_state_max_pairwise_distance": self.steady_state_max_pairwise_distance,
            "terminal_speeds": self.terminal_speeds.tolist(),
            "steady_window": list(self.steady_window),
        }


def compute_metrics(traj: Trajectory, steady_frac: float = STEADY_FRACTION) -> MetricsReport:
    if traj.n_records < 1:
        raise ValueError("trajectory has no recorded steps")
    abs_u = np.abs(traj.u)                        # (K, n)
    tau_norm = np.linalg.norm(traj.tau, axis=2)   # (K, n)
    peak_u = abs_u.max(axis=0)
    peak_tau = tau_norm.max(axis=0)
    rms_u = np.sqrt((abs_u ** 2).mean(axis=0))
    rms_tau = np.sqrt((tau_norm ** 2).mean(axis=0))

    t_end = traj.t[-1]
    t_start = t_end - steady_frac * (t_end - traj.t[0])
    window = traj.t >= t_start
    dmax = traj.max_pairwise_distance()
    steady = float(dmax[window].max()) if traj.n > 1 else 0.0

    return MetricsReport(
        peak_u=peak_u, peak_tau=peak_tau, rms_u=rms_u, rms_tau=rms_tau,
        max_peak_u=float(peak_u.max()), max_peak_tau=float(peak_tau.max()),
        max_rms_u=float(rms_u.max()), max_rms_tau=float(rms_tau.max()),
        steady_state_max_pairwise_distance=steady,
        terminal_speeds=traj.speeds()[-1].copy(),
        steady_window=(float(t_start), float(t_end)))
