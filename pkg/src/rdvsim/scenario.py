"""Scenario files: ingestion, validation, emission.

A scenario is one JSON document (schema_version 1) describing the vehicles,
the sensor digraph, the consensus and control gains, gravity, and the
simulation settings. Two bundled scenarios encode the reference experiment:
``paper_fig5`` (no disturbance) and ``paper_fig6`` (bounded disturbances at
10 Hz). Validation reports every failure found, not just the first.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from . import engine, so3
from .consensus import ConsensusLaw
from .control import ControlGains
from .digraph import SensorDigraph
from .disturbance import DisturbanceSpec
from .dynamics import VehicleParams, VehicleState, WorldConfig
from .engine import SimConfig, Trajectory
from .monitor import MonitorConfig

SCHEMA_VERSION = 1
BUNDLED = ("paper_fig5", "paper_fig6")


class ScenarioError(ValueError):
    """Carries the full list of validation failures."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  - " + "\n  - ".join(self.errors))


@dataclass(eq=False)
class Scenario:
    name: str
    params: list            # [VehicleParams]
    initial: list           # [VehicleState]
    graph: SensorDigraph
    law: ConsensusLaw
    gains: ControlGains
    world: WorldConfig
    sim: SimConfig
    monitor: MonitorConfig | None = None

    @property
    def n(self) -> int:
        return self.graph.n

    def with_sim(self, **changes) -> "Scenario":
        """Copy with SimConfig fields replaced (seed, dt, t_final, ...)."""
        out = Scenario(**{**self.__dict__})
        out.sim = replace(self.sim, **changes)
        return out

    def with_gains(self, k1: float, k2: float) -> "Scenario":
        out = Scenario(**{**self.__dict__})
        out.gains = ControlGains(k1=k1, k2=k2)
        return out


def run_scenario(s: Scenario) -> Trajectory:
    traj = engine.run(s.params, s.initial, s.world, s.graph, s.law, s.gains, s.sim)
    traj.meta["name"] = s.name
    return traj


def _vec3(node, what, errors):
    arr = np.asarray(node, dtype=float) if node is not None else None
    if arr is None or arr.shape != (3,) or not np.all(np.isfinite(arr)):
        errors.append(f"{what}: expected a finite 3-vector, got {node!r}")
        return np.zeros(3)
    return arr


def _mat3(node, what, errors):
    arr = np.asarray(node, dtype=float) if node is not None else None
    if arr is None or arr.shape != (3, 3) or not np.all(np.isfinite(arr)):
        errors.append(f"{what}: expected a finite 3x3 matrix, got {node!r}")
        return np.eye(3)
    return arr


def scenario_from_dict(doc: dict, name: str = "scenario") -> Scenario:
    errors = []
    if doc.get("schema_version") != SCHEMA_VERSION:
        errors.append(f"schema_version must be {SCHEMA_VERSION}, got {doc.get('schema_version')!r}")
    name = doc.get("name", name)

    vehicles = doc.get("vehicles")
    if not isinstance(vehicles, list) or not vehicles:
        errors.append("vehicles: expected a non-empty list")
        vehicles = []
    n = len(vehicles)

    params = []
    initial = []
    for k, v in enumerate(vehicles, start=1):
        m = v.get("m")
        J = _mat3(v.get("J"), f"vehicles[{k}].J", errors)
        try:
            params.append(VehicleParams(m=float(m), J=J))
        except (TypeError, ValueError) as exc:
            errors.append(f"vehicles[{k}]: {exc}")
            params.append(VehicleParams(m=1.0, J=np.eye(3)))
        x = _vec3(v.get("x"), f"vehicles[{k}].x", errors)
        vel = _vec3(v.get("v", [0, 0, 0]), f"vehicles[{k}].v", errors)
        R = _mat3(v.get("R", np.eye(3).tolist()), f"vehicles[{k}].R", errors)
        w = _vec3(v.get("w", [0, 0, 0]), f"vehicles[{k}].w", errors)
        if not so3.is_rotation(R):
            errors.append(f"vehicles[{k}].R is not in SO(3) within 1e-9: {R.tolist()}")
            R = np.eye(3)
        try:
            initial.append(VehicleState(x=x, v=vel, R=R, w_body=w))
        except ValueError as exc:
            errors.append(f"vehicles[{k}]: {exc}")
            initial.append(VehicleState(x=np.zeros(3), v=np.zeros(3), R=np.eye(3), w_body=np.zeros(3)))

    graph_doc = doc.get("graph", {})
    edges = set()
    if not isinstance(graph_doc, dict):
        errors.append("graph: expected an object mapping vehicle -> neighbor list")
        graph_doc = {}
    for key, nbrs in graph_doc.items():
        try:
            i = int(key)
        except ValueError:
            errors.append(f"graph: key {key!r} is not a vehicle index")
            continue
        if not (1 <= i <= max(n, 1)):
            errors.append(f"graph: vehicle {i} outside 1..{n}")
            continue
        for j in nbrs:
            j = int(j)
            if not (1 <= j <= n):
                errors.append(f"graph: edge {i}->{j} references vehicle {j} outside 1..{n}")
            elif i == j:
                errors.append(f"graph: self-loop {i}->{j}")
            else:
                edges.add((i, j))
    try:
        graph = SensorDigraph(max(n, 1), frozenset(edges))
    except ValueError as exc:
        errors.append(f"graph: {exc}")
        graph = SensorDigraph(max(n, 1), frozenset())

    cons = doc.get("consensus", {})
    try:
        if "edges" in cons:
            a = {}
            b = {}
            for key, gains_doc in cons["edges"].items():
                i_s, _, j_s = key.partition("->")
                e = (int(i_s), int(j_s))
                if e not in graph.edges:
                    errors.append(f"consensus.edges: {key} is not an edge of the graph")
                    continue
                a[e] = float(gains_doc["a"])
                b[e] = float(gains_doc["b"])
            law = ConsensusLaw(a=a, b=b)
        else:
            law = ConsensusLaw.ren_atkins(graph, float(cons.get("a", 0.3)),
                                          float(cons.get("gamma", 30.0)))
        law.validate_against(graph)
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"consensus: {exc}")
        law = ConsensusLaw.ren_atkins(graph, 0.3, 30.0)

    ctrl = doc.get("control", {})
    try:
        gains = ControlGains(k1=float(ctrl.get("k1", 2.0)), k2=float(ctrl.get("k2", 0.45)))
    except (TypeError, ValueError) as exc:
        errors.append(f"control: {exc}")
        gains = ControlGains(k1=2.0, k2=0.45)

    world_doc = doc.get("world", {})
    world = WorldConfig(gravity=_vec3(world_doc.get("gravity", [0, 0, 0]), "world.gravity", errors))

    sim_doc = doc.get("sim", {})
    dist = None
    dist_doc = sim_doc.get("disturbance")
    if dist_doc is not None:
        try:
            dist = DisturbanceSpec(
                force_max=float(dist_doc.get("force_max", 0.25)),
                torque_max=float(dist_doc.get("torque_max", 0.25)),
                gyro_max=float(dist_doc.get("gyro_max", 0.25)),
                f_angle_max=float(dist_doc.get("f_angle_max", 0.25)),
                f_scale_range=tuple(dist_doc.get("f_scale_range", (0.75, 1.25))),
                update_hz=float(dist_doc.get("update_hz", 10.0)))
        except (TypeError, ValueError) as exc:
            errors.append(f"sim.disturbance: {exc}")
    try:
        sim = SimConfig(dt=float(sim_doc.get("dt", 1e-3)),
                        t_final=float(sim_doc.get("t_final", 60.0)),
                        seed=int(sim_doc.get("seed", 0)),
                        disturbance=dist,
                        record_every=int(sim_doc.get("record_every", 10)),
                        zoh=bool(sim_doc.get("zoh", True)))
    except (TypeError, ValueError) as exc:
        errors.append(f"sim: {exc}")
        sim = SimConfig()

    monitor = None
    mon_doc = doc.get("monitor")
    if mon_doc is not None:
        try:
            monitor = MonitorConfig(
                alpha=float(mon_doc["alpha"]),
                delta=(None if mon_doc.get("delta") is None else float(mon_doc["delta"])),
                epsilon=float(mon_doc.get("epsilon", 0.25)),
                varrho=float(mon_doc.get("varrho", 0.5)),
                sample_count=int(mon_doc.get("sample_count", 100_000)))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"monitor: {exc}")

    if errors:
        raise ScenarioError(errors)
    return Scenario(name=name, params=params, initial=initial, graph=graph,
                    law=law, gains=gains, world=world, sim=sim, monitor=monitor)


def scenario_to_dict(s: Scenario) -> dict:
    vehicles = []
    for p, st in zip(s.params, s.initial):
        vehicles.append({"m": p.m, "J": p.J.tolist(), "x": st.x.tolist(),
                         "v": st.v.tolist(), "R": st.R.tolist(),
                         "w": st.w_body.tolist()})
    graph = {str(i): s.graph.neighbors(i) for i in range(1, s.n + 1)
             if s.graph.neighbors(i)}
    consensus = {"edges": {f"{i}->{j}": {"a": s.law.a[(i, j)], "b": s.law.b[(i, j)]}
                           for (i, j) in sorted(s.law.a)}}
    sim = {"dt": s.sim.dt, "t_final": s.sim.t_final, "seed": s.sim.seed,
           "record_every": s.sim.record_every, "zoh": s.sim.zoh,
           "disturbance": None}
    if s.sim.disturbance is not None:
        d = s.sim.disturbance
        sim["disturbance"] = {"force_max": d.force_max, "torque_max": d.torque_max,
                              "gyro_max": d.gyro_max, "f_angle_max": d.f_angle_max,
                              "f_scale_range": list(d.f_scale_range),
                              "update_hz": d.update_hz}
    doc = {"schema_version": SCHEMA_VERSION, "name": s.name, "vehicles": vehicles,
           "graph": graph, "consensus": consensus,
           "control": {"k1": s.gains.k1, "k2": s.gains.k2},
           "world": {"gravity": s.world.gravity.tolist()}, "sim": sim}
    if s.monitor is not None:
        doc["monitor"] = {"alpha": s.monitor.alpha, "delta": s.monitor.delta,
                          "epsilon": s.monitor.epsilon, "varrho": s.monitor.varrho,
                          "sample_count": s.monitor.sample_count}
    return doc


def load_scenario(path) -> Scenario:
    """Load and fully validate a scenario JSON file, or a bundled name."""
    if str(path) in BUNDLED:
        return load_bundled(str(path))
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"not valid JSON: {exc}"]) from exc
    return scenario_from_dict(doc, name=str(path))


def emit_scenario(s: Scenario, path) -> None:
    with open(path, "w") as f:
        json.dump(scenario_to_dict(s), f, indent=2, sort_keys=True)
        f.write("\n")


def load_bundled(name: str) -> Scenario:
    if name not in BUNDLED:
        raise ScenarioError([f"unknown bundled scenario {name!r}; have {BUNDLED}"])
    text = resources.files("rdvsim").joinpath(f"scenarios/{name}.json").read_text()
    return scenario_from_dict(json.loads(text), name=name)
