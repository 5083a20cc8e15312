"""Command-line surface: check, run, sweep, constants, monitor.

Exit codes: 0 success, 2 configuration error, 3 certification failure,
4 numerical abort. Failures also emit one machine-readable JSON object on
stderr: {"error": {"code": ..., "kind": ..., "message": ...}}.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .consensus import build_relative_closed_loop, certify, slowest_decay_rate, synthesize_P
from .csv_io import read_trajectory_csv, write_trajectory_csv
from .engine import NumericalAbort
from .metrics import compute_metrics
from .monitor import (MonitorConfig, decrease_test, estimate_alpha_star,
                      estimate_M_constants, monitor_trajectory)
from .scenario import ScenarioError, load_scenario, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3
EXIT_NUMERICAL = 4


class CliError(RuntimeError):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _emit_error(code: int, kind: str, message: str) -> None:
    json.dump({"error": {"code": code, "kind": kind, "message": message}},
              sys.stderr)
    sys.stderr.write("\n")


def _load(path: str):
    try:
        return load_scenario(path)
    except ScenarioError as exc:
        raise CliError(EXIT_CONFIG, "config", str(exc)) from exc
    except OSError as exc:
        raise CliError(EXIT_CONFIG, "config", f"cannot read scenario: {exc}") from exc


def _apply_overrides(s, args):
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "dt", None) is not None:
        changes["dt"] = args.dt
    if getattr(args, "t_final", None) is not None:
        changes["t_final"] = args.t_final
    if getattr(args, "record_every", None) is not None:
        changes["record_every"] = args.record_every
    if changes:
        try:
            s = s.with_sim(**changes)
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, "config", str(exc)) from exc
    return s


def cmd_check(args) -> int:
    s = _load(args.scenario)
    reachable, witness = s.graph.has_globally_reachable_node()
    rcl = build_relative_closed_loop(s.law, s.graph)
    hurwitz = certify(rcl)
    report = {"scenario": s.name, "n": s.n,
              "globally_reachable_node": reachable, "witness": witness,
              "hurwitz": hurwitz,
              "slowest_decay_rate": slowest_decay_rate(rcl) if hurwitz else None}
    print(json.dumps(report, indent=2))
    if not (reachable and hurwitz):
        raise CliError(EXIT_CERTIFICATION, "certification",
                       "digraph reachability or Hurwitz certification failed")
    return EXIT_OK


def cmd_run(args) -> int:
    s = _apply_overrides(_load(args.scenario), args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        traj = run_scenario(s)
    except NumericalAbort as exc:
        raise CliError(EXIT_NUMERICAL, "numerical", str(exc)) from exc
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "config", str(exc)) from exc
    csv_path = out_dir / f"{s.name}.csv"
    metrics_path = out_dir / f"{s.name}.metrics.json"
    write_trajectory_csv(traj, csv_path)
    report = compute_metrics(traj).to_dict()
    report["run"] = {"scenario": s.name, "seed": s.sim.seed, "dt": s.sim.dt,
                     "t_final": s.sim.t_final, "record_every": s.sim.record_every}
    with open(metrics_path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    print(json.dumps({"csv": str(csv_path), "metrics": str(metrics_path),
                      "steady_state_max_pairwise_distance":
                          report["steady_state_max_pairwise_distance"]}, indent=2))
    return EXIT_OK


def _parse_gains(text: str) -> list:
    pairs = []
    for part in text.split(","):
        k1_s, _, k2_s = part.partition(":")
        pairs.append((float(k1_s), float(k2_s)))
    return pairs


def _parse_seeds(text: str) -> list:
    if ":" in text:
        lo, _, hi = text.partition(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",")]


def cmd_sweep(args) -> int:
    s = _apply_overrides(_load(args.scenario), args)
    try:
        gains = _parse_gains(args.gains) if args.gains else [(s.gains.k1, s.gains.k2)]
        seeds = _parse_seeds(args.seeds) if args.seeds else [s.sim.seed]
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "config",
                       f'bad --gains/--seeds (want "k1:k2,..." and "0:9" or "0,1"): {exc}') from exc
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for (k1, k2) in gains:
        for seed in seeds:
            try:
                run_s = s.with_gains(k1, k2).with_sim(seed=seed)
                traj = run_scenario(run_s)
            except NumericalAbort as exc:
                raise CliError(EXIT_NUMERICAL, "numerical",
                               f"k1={k1} k2={k2} seed={seed}: {exc}") from exc
            except ValueError as exc:
                raise CliError(EXIT_CONFIG, "config",
                               f"k1={k1} k2={k2} seed={seed}: {exc}") from exc
            rep = compute_metrics(traj)
            rows.append({"k1": k1, "k2": k2, "seed": seed,
                         "steady_state_max_pairwise_distance":
                             rep.steady_state_max_pairwise_distance,
                         "max_peak_abs_u": rep.max_peak_u,
                         "max_peak_tau_norm": rep.max_peak_tau,
                         "max_rms_abs_u": rep.max_rms_u,
                         "max_rms_tau_norm": rep.max_rms_tau})
            if args.write_csv:
                write_trajectory_csv(traj, out_dir / f"{s.name}_k1={k1}_k2={k2}_seed={seed}.csv")
    report = {"scenario": s.name, "rows": rows}
    path = out_dir / f"{s.name}.sweep.json"
    with open(path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    print(json.dumps({"sweep": str(path), "runs": len(rows)}, indent=2))
    return EXIT_OK


def _certified_pieces(s):
    rcl = build_relative_closed_loop(s.law, s.graph)
    if not certify(rcl):
        raise CliError(EXIT_CERTIFICATION, "certification",
                       "consensus law is not Hurwitz on this digraph")
    return rcl, synthesize_P(rcl)


def cmd_constants(args) -> int:
    s = _load(args.scenario)
    rcl, lyap = _certified_pieces(s)
    samples = args.samples
    alpha = estimate_alpha_star(rcl, lyap, samples, args.seed)
    consts = estimate_M_constants(rcl, lyap, s.params, samples, args.seed)
    report = {"scenario": s.name, "alpha_star": alpha.to_dict(),
              "M": consts.to_dict()}
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(json.dumps({"constants": args.out,
                          "alpha_star": alpha.value}, indent=2))
    else:
        print(text)
    return EXIT_OK


def cmd_monitor(args) -> int:
    s = _load(args.scenario)
    rcl, lyap = _certified_pieces(s)
    try:
        traj = read_trajectory_csv(args.input)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, "config", f"cannot read trajectory: {exc}") from exc
    if traj.n != s.n:
        raise CliError(EXIT_CONFIG, "config",
                       f"trajectory has {traj.n} vehicles, scenario has {s.n}")
    if args.alpha is not None:
        alpha = args.alpha
    elif s.monitor is not None:
        alpha = s.monitor.alpha
    else:
        alpha = 1.1 * estimate_alpha_star(rcl, lyap, 50_000, seed=0).value
    trace = monitor_trajectory(traj, rcl, lyap, s.gains, s.params, alpha)
    if args.trace_out:
        mat = np.column_stack([trace.t, trace.V, trace.rho, trace.W_tran,
                               trace.W_rot, trace.W, trace.gamma_dist])
        np.savetxt(args.trace_out, mat, fmt="%.17g", delimiter=",",
                   header="t,V,rho,W_tran,W_rot,W,gamma_dist", comments="")
    config = MonitorConfig(alpha=alpha, delta=args.delta)
    report = decrease_test(trace, config).to_dict()
    report["alpha"] = alpha
    report["terminal_W"] = float(trace.W[-1])
    report["terminal_gamma_dist"] = float(trace.gamma_dist[-1])
    if s.monitor is not None:
        report["epsilon"] = s.monitor.epsilon
        report["epsilon_satisfied"] = bool(trace.gamma_dist[-1] <= s.monitor.epsilon)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(json.dumps({"monitor": args.out, "violations": report["count"]}, indent=2))
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rdvsim",
                                 description="distributed rendezvous simulator and analysis toolkit")
    ap.add_argument("--version", action="version", version=f"rdvsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, seeds=False):
        p.add_argument("scenario", help="scenario JSON path or bundled name (paper_fig5, paper_fig6)")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--t-final", type=float, default=None)
        p.add_argument("--record-every", type=int, default=None)

    p = sub.add_parser("check", help="graph reachability + Hurwitz certification")
    p.add_argument("scenario")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="single run: CSV trajectory + metrics JSON")
    add_common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="gain grid / seed batch")
    add_common(p)
    p.add_argument("--gains", default=None, help='pairs "k1:k2,k1:k2,..."')
    p.add_argument("--seeds", default=None, help='list "0,1,2" or range "0:9"')
    p.add_argument("--write-csv", action="store_true", help="also write per-run CSVs")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("constants", help="sampled alpha* and M1..M5 report")
    p.add_argument("scenario")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_constants)

    p = sub.add_parser("monitor", help="decrease test along a recorded run")
    p.add_argument("scenario")
    p.add_argument("--input", required=True, help="trajectory CSV from 'run'")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--trace-out", default=None,
                   help="also write the monitor time series as CSV (t,V,rho,W_tran,W_rot,W,gamma_dist)")
    p.set_defaults(fn=cmd_monitor)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        _emit_error(exc.code, exc.kind, str(exc))
        return exc.code
    except NumericalAbort as exc:
        _emit_error(EXIT_NUMERICAL, "numerical", str(exc))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
