"""Deterministic simulator and analysis toolkit for the distributed
rendezvous of underactuated rigid bodies (quadrotor-class vehicles)."""

__version__ = "0.1.0"

from .consensus import (ConsensusLaw, LyapunovForm, RelativeClosedLoop,
                        build_relative_closed_loop, certify, eval_f,
                        synthesize_P)
from .control import (BodyMeasurement, ControlGains, control,
                      ideal_inertial_force, measure, reference_omega)
from .digraph import SensorDigraph, fig4_digraph
from .disturbance import DisturbanceSpec, make_rng, sample_disturbance
from .dynamics import (ControlOutput, VehicleParams, VehicleState, WorldConfig,
                       state_derivative, thrust_direction)
from .engine import NumericalAbort, SimConfig, Trajectory, run, run_free, step
from .metrics import MetricsReport, compute_metrics
from .monitor import (MonitorConfig, MonitorSample, decrease_test,
                      estimate_alpha_star, estimate_M_constants, eval_W,
                      monitor_trajectory, rho_theta, sample_W_values)
from .scenario import (Scenario, ScenarioError, emit_scenario, load_bundled,
                       load_scenario, run_scenario)
from .so3 import hat, is_rotation, random_rotations, reorthonormalize, so3_exp
