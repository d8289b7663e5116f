"""Command-line front end.

Three commands:

    geofeas simulate --config PATH --out DIR [--method euler|lie_euler]
                     [--h F] [--steps N] [--no-constraints] [--jobs K]
    geofeas kinfeas --config PATH [--json]
    geofeas extract-control --traj DIR [--config PATH]

``simulate`` writes trajectory.csv, diagnostics.csv, controls.csv and
report.txt into the output directory. ``extract-control`` recomputes
controls.csv for an existing output directory; it locates the scenario
config through the ``config:`` line of report.txt unless --config is
given. Exit codes: 0 success, 1 parse or validation failure, 2
infeasible initial state, 3 singular constraint system mid-run.

All floating-point CSV fields are printed with 17 significant digits,
so re-parsing reproduces the binary values exactly, and identical
inputs produce byte-identical outputs. GEOFEAS_SEED is reserved and
unused (runs are deterministic); GEOFEAS_BACKEND selects the execution
path (numba, numpy or object).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import auv, constraints, dynamics, groups, integrators
from .config import ConfigError, Scenario, TOMLError, load_scenario
from .errors import InfeasibleStateError, SingularConstraintError
from .groups import GroupElement, ProductAlgebraElement, ProductElement
from .integrators import IntegratorConfig, Trajectory


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _trajectory_header(r, m):
    cols = ["t"]
    for i in range(1, r + 1):
        cols += [f"b{i}_x", f"b{i}_y", f"b{i}_z"]
        cols += [f"R{i}_{a}{b}" for a in (1, 2, 3) for b in (1, 2, 3)]
        cols += [f"nu{i}_1", f"nu{i}_2", f"nu{i}_3"]
        cols += [f"omega{i}_1", f"omega{i}_2", f"omega{i}_3"]
    cols += [f"lambda_{k}" for k in range(1, m + 1)]
    cols += [f"phi_{k}" for k in range(1, m + 1)]
    return cols


def write_trajectory_csv(path, traj: Trajectory):
    r, m = traj.r, traj.lam.shape[1]
    rows = []
    for k in range(len(traj)):
        row = [traj.times[k]]
        for i in range(r):
            row += list(traj.matrices[k, i, :3, 3])
            row += list(traj.matrices[k, i, :3, :3].reshape(-1))
            row += list(traj.xi[k, i, :3])
            row += list(traj.xi[k, i, 3:])
        row += list(traj.lam[k])
        row += list(traj.phi[k])
        rows.append(row)
    _write_csv(path, _trajectory_header(r, m), rows)


def write_diagnostics_csv(path, traj: Trajectory):
    r, m = traj.r, traj.lam.shape[1]
    cols = ["t", "energy"]
    cols += [f"ortho{i}" for i in range(1, r + 1)]
    for i in range(1, r + 1):
        cols += [f"pi{i}_{a}" for a in range(1, 7)]
    cols += [f"dphi_{k}" for k in range(1, m + 1)]
    rows = []
    for k in range(len(traj)):
        row = [traj.times[k], traj.energy[k]]
        row += list(traj.ortho[k])
        for i in range(r):
            row += list(traj.momentum[k, i])
        row += list(traj.dphi[k])
        rows.append(row)
    _write_csv(path, cols, rows)


def write_controls_csv(path, control: auv.ControlSignal):
    r = control.u.shape[1]
    cols = ["t"]
    for i in range(1, r + 1):
        cols += [f"u{i}_x", f"u{i}_y", f"u{i}_z"]
        cols += [f"ubar{i}_x", f"ubar{i}_y", f"ubar{i}_z"]
    rows = []
    for k in range(len(control)):
        row = [control.times[k]]
        for i in range(r):
            row += list(control.u[k, i])
            row += list(control.ubar[k, i])
        rows.append(row)
    _write_csv(path, cols, rows)


def write_report(path, scenario: Scenario, cfg: IntegratorConfig,
                 traj: Trajectory, regularity):
    lines = [
        f"config: {os.path.abspath(scenario.path)}",
        f"group: {scenario.group_tag}",
        f"agents: {len(scenario.state.g)}",
        f"constraints: {scenario.graph.m}",
        f"constraints_enforced: {'yes' if cfg.enforce_constraints else 'no'}",
        f"method: {cfg.method}",
        f"h: {_fmt(cfg.h)}",
        f"steps: {cfg.steps}",
        f"record_every: {cfg.record_every}",
        f"records: {len(traj)}",
        f"backend: {traj.backend_used}",
        f"regularity: {'regular' if regularity.regular else 'irregular'}",
        f"regularity_sigma_min: {_fmt(regularity.sigma_min)}",
        f"regularity_sigma_max: {_fmt(regularity.sigma_max)}",
        f"initial_max_abs_phi: {_fmt(np.max(np.abs(traj.phi[0])) if traj.phi.size else 0.0)}",
        f"max_abs_phi: {_fmt(traj.max_abs_phi)}",
        f"max_abs_dphi_dt: {_fmt(traj.max_abs_rate)}",
        f"max_distance_drift_m: {_fmt(traj.max_distance_drift)}",
        f"max_orthogonality_error: {_fmt(traj.max_ortho)}",
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _load_or_fail(path):
    try:
        return load_scenario(path), 0
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None, 1
    except TOMLError as exc:
        print(f"error: config parse failure in {path}: {exc}", file=sys.stderr)
        return None, 1
    except ConfigError as exc:
        print(f"error: invalid config {path}: {exc}", file=sys.stderr)
        return None, 1


def cmd_simulate(args):
    scenario, code = _load_or_fail(args.config)
    if scenario is None:
        return code
    if scenario.group_tag != groups.SE3:
        print("error: simulate requires an SE3 scenario config "
              "(kinematic SE2 configs are for kinfeas)", file=sys.stderr)
        return 1
    if scenario.integrator is None:
        print("error: config has no [integrator] table", file=sys.stderr)
        return 1
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 1
    base = scenario.integrator
    cfg = IntegratorConfig(
        h=args.h if args.h is not None else base.h,
        steps=args.steps if args.steps is not None else base.steps,
        method=args.method if args.method is not None else base.method,
        record_every=base.record_every,
        enforce_constraints=not args.no_constraints,
    )
    try:
        traj = integrators.run_simulation(scenario.model, scenario.graph,
                                          scenario.state, cfg)
    except InfeasibleStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SingularConstraintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    regularity = dynamics.regularity_check(scenario.model, scenario.graph,
                                           scenario.state.g)
    control = auv.extract_control(scenario.params, traj, scenario.sign_convention)
    os.makedirs(args.out, exist_ok=True)
    write_trajectory_csv(os.path.join(args.out, "trajectory.csv"), traj)
    write_diagnostics_csv(os.path.join(args.out, "diagnostics.csv"), traj)
    write_controls_csv(os.path.join(args.out, "controls.csv"), control)
    write_report(os.path.join(args.out, "report.txt"), scenario, cfg, traj, regularity)
    print(f"simulated {cfg.steps} steps ({len(traj)} records) into {args.out}")
    return 0


def cmd_kinfeas(args):
    scenario, code = _load_or_fail(args.config)
    if scenario is None:
        return code
    from .feasibility import admissible_velocity_space
    try:
        system = admissible_velocity_space(scenario.graph, scenario.state.g)
    except InfeasibleStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    basis = system.basis_array()
    if args.json:
        doc = {
            "group": scenario.group_tag,
            "agents": len(scenario.state.g),
            "constraints": scenario.graph.m,
            "rank": system.rank,
            "nullspace_dim": system.nullspace_dim,
            "basis": [[float(x) for x in row] for row in basis],
        }
        print(json.dumps(doc, sort_keys=True))
    else:
        print(f"rank {system.rank}, nullspace dim {system.nullspace_dim}")
        for idx, row in enumerate(basis, start=1):
            print(f"basis[{idx}] = [" + ", ".join(_fmt(x) for x in row) + "]")
    return 0


def read_trajectory_csv(path, r, m):
    """Parse a trajectory.csv back into arrays (times, b, R, nu, om, lam, phi)."""
    with open(path, "r") as fh:
        header = fh.readline().strip().split(",")
        want = _trajectory_header(r, m)
        if header != want:
            raise ValueError(
                f"trajectory header mismatch: expected {len(want)} columns "
                f"starting {want[:4]}, found {len(header)}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    K = data.shape[0]
    times = data[:, 0]
    b = np.zeros((K, r, 3))
    R = np.zeros((K, r, 3, 3))
    nu = np.zeros((K, r, 3))
    om = np.zeros((K, r, 3))
    for i in range(r):
        base = 1 + i * 18
        b[:, i] = data[:, base:base + 3]
        R[:, i] = data[:, base + 3:base + 12].reshape(K, 3, 3)
        nu[:, i] = data[:, base + 12:base + 15]
        om[:, i] = data[:, base + 15:base + 18]
    lam = data[:, 1 + r * 18:1 + r * 18 + m]
    phi = data[:, 1 + r * 18 + m:1 + r * 18 + 2 * m]
    return times, b, R, nu, om, lam, phi


def _config_from_report(traj_dir):
    report = os.path.join(traj_dir, "report.txt")
    if not os.path.exists(report):
        return None
    with open(report) as fh:
        for line in fh:
            if line.startswith("config: "):
                return line[len("config: "):].strip()
    return None


def cmd_extract_control(args):
    config_path = args.config or _config_from_report(args.traj)
    if config_path is None:
        print("error: no --config given and no config line in report.txt",
              file=sys.stderr)
        return 1
    scenario, code = _load_or_fail(config_path)
    if scenario is None:
        return code
    if scenario.group_tag != groups.SE3:
        print("error: extract-control requires an SE3 scenario", file=sys.stderr)
        return 1
    traj_path = os.path.join(args.traj, "trajectory.csv")
    if not os.path.exists(traj_path):
        print(f"error: {traj_path} not found", file=sys.stderr)
        return 1
    r, m = len(scenario.state.g), scenario.graph.m
    try:
        times, b, R, nu, om, lam, phi = read_trajectory_csv(traj_path, r, m)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    K = times.shape[0]
    mats = np.zeros((K, r, 4, 4))
    mats[:, :, :3, :3] = R
    mats[:, :, :3, 3] = b
    mats[:, :, 3, 3] = 1.0
    xis = np.concatenate([nu, om], axis=2)
    xidots = np.zeros((K, r, 6))
    for k in range(K):
        g = ProductElement([GroupElement(groups.SE3, mats[k, i]) for i in range(r)])
        xi = ProductAlgebraElement(groups.SE3, xis[k])
        state = integrators.SystemState(g=g, xi=xi, t=float(times[k]))
        xidots[k] = auv.auv_rhs(scenario.params, scenario.graph, state, lam[k],
                                scenario.sign_convention)
    traj = Trajectory(
        group_tag=groups.SE3, times=times, matrices=mats, xi=xis, xidot=xidots,
        lam=lam, phi=phi, dphi=np.zeros((K, m)), energy=np.zeros(K),
        momentum=np.zeros((K, r, 6)), ortho=np.zeros((K, r)),
        method="unknown", h=float(times[1] - times[0]) if K > 1 else 0.0,
        steps=K - 1, record_every=1, max_abs_phi=0.0, max_abs_rate=0.0,
        max_ortho=0.0, max_distance_drift=0.0)
    control = auv.extract_control(scenario.params, traj, scenario.sign_convention)
    write_controls_csv(os.path.join(args.traj, "controls.csv"), control)
    print(f"wrote {os.path.join(args.traj, 'controls.csv')} ({K} records)")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="geofeas",
        description="Motion feasibility and constrained dynamics for formations "
                    "on matrix Lie groups.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a scenario and write CSV outputs")
    sim.add_argument("--config", required=True, help="scenario config file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--method", choices=("euler", "lie_euler"), default=None,
                     help="override the integrator method")
    sim.add_argument("--h", type=float, default=None, help="override the step size")
    sim.add_argument("--steps", type=int, default=None, help="override the step count")
    sim.add_argument("--no-constraints", action="store_true",
                     help="run with multipliers forced to zero")
    sim.add_argument("--jobs", type=int, default=1,
                     help="parallel jobs for parameter sweeps (single runs use 1)")
    sim.set_defaults(func=cmd_simulate)

    kin = sub.add_parser("kinfeas", help="admissible velocity space at the configured state")
    kin.add_argument("--config", required=True, help="scenario config file")
    kin.add_argument("--json", action="store_true", help="machine-readable output")
    kin.set_defaults(func=cmd_kinfeas)

    ext = sub.add_parser("extract-control",
                         help="recompute controls.csv for an existing run directory")
    ext.add_argument("--traj", required=True, help="directory written by simulate")
    ext.add_argument("--config", default=None,
                     help="scenario config (default: the config line in report.txt)")
    ext.set_defaults(func=cmd_extract_control)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
