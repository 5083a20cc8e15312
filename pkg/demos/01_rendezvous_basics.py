#!/usr/bin/env python3
"""Walk through the core pipeline: digraph -> certification -> closed-loop run.

Five quadrotor-class vehicles sense each other through a fixed directed
graph. Each one measures only body-frame relative positions/velocities of
the vehicles it can see, plus its own rate gyro, and applies the
thrust/torque feedback. We certify the consensus gains first, then simulate
and report how tightly the group rendezvouses.
"""
import numpy as np

from rdvsim import build_relative_closed_loop, certify, compute_metrics
from rdvsim.consensus import slowest_decay_rate
from rdvsim.scenario import load_bundled, run_scenario

scenario = load_bundled("paper_fig5")
print(f"scenario: {scenario.name} with {scenario.n} vehicles")
print(f"edges: {sorted(scenario.graph.edges)}")

found, witness = scenario.graph.has_globally_reachable_node()
print(f"globally reachable node: {found} (witness {witness})")

rcl = build_relative_closed_loop(scenario.law, scenario.graph)
print(f"relative closed loop is {rcl.dim}x{rcl.dim}; Hurwitz: {certify(rcl)}")
rate = slowest_decay_rate(rcl)
print(f"slowest mode decays at {rate:.4f} 1/s -> settling takes ~{5 / rate:.0f} s")

traj = run_scenario(scenario)
rep = compute_metrics(traj)
print(f"\nafter {traj.t[-1]:.0f} s:")
print(f"  steady-state max pairwise distance: {rep.steady_state_max_pairwise_distance:.4f} m")
print(f"  peak |u| = {rep.max_peak_u:.2f} N, peak |tau| = {rep.max_peak_tau:.2f} N*m")
print(f"  terminal speeds: {np.round(rep.terminal_speeds, 3)} m/s")
print("\nnote: the ensemble keeps drifting (only relative states are controlled);")
print("distances between vehicles still contract to a fraction of a meter.")
