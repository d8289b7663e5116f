"""Scenario configuration files.

Configs are TOML documents (conventionally with a .cfg extension). The
schema, with units and defaults:

    [scenario]
    group = "SE3"                      # "SE3" or "SE2"
    constraint_kind = "center_distance"  # or "planar_frobenius" (SE2)
    force_sign_convention = "variational"  # or "as_printed"; optional

    [integrator]                       # required for simulate, optional otherwise
    method = "lie_euler"               # or "euler"
    h = 0.005                          # step size, seconds
    steps = 5000                       # step count
    record_every = 1                   # optional, keep every k-th step

    [[agents]]                         # one block per agent, SE3 form:
    mass = 123.8                       # kg
    added_mass = [65.0, 70.0, 75.0]    # kg, translational inertia diagonal extras
    inertia = [5.46, 5.29, 5.72]       # kg m^2, rotational inertia diagonal
    buoyancy_force = 1215.8            # N, the lump rho*gamma*g
    buoyancy_offset = [0.0, 0.0, -0.007]  # m, center of gravity to buoyancy
    radius = 1.0                       # m, safety sphere
    gravity = 9.81                     # m/s^2, optional
    position = [0.0, 0.0, 0.0]         # m
    rotation = [1,0,0, 0,1,0, 0,0,1]   # row-major, optional (identity)
    velocity_world = [0.1, 0.2, 1.0]   # m/s; or velocity_body, not both
    angular_velocity = [0.3, 0.2, 0.1] # rad/s, body frame, optional

    [[agents]]                         # SE2 form: only a pose
    pose = [0.0, 0.0, 0.3]             # x (m), y (m), heading (rad)

    [[constraints]]
    i = 1                              # agent labels, 1-based
    j = 2
    distance = 10.0                    # m (surface separation for SE3)

Validation failures raise ConfigError naming the offending key.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import constraints, groups
from .auv import AuvParams, auv_model
from .constraints import ConstraintGraph
from .groups import GroupElement, ProductAlgebraElement, ProductElement
from .integrators import IntegratorConfig, SystemState

TOMLError = tomllib.TOMLDecodeError

_KINDS = {
    "center_distance": constraints.SE3_CENTER_DISTANCE,
    "planar_frobenius": constraints.SE2_FROBENIUS,
}
_DEFAULT_KIND = {
    groups.SE3: "center_distance",
    groups.SE2: "planar_frobenius",
}


class ConfigError(ValueError):
    """A config file failed validation; the message names the key."""


@dataclass
class Scenario:
    """Everything a command needs, parsed and validated."""

    path: str
    group_tag: str
    sign_convention: str
    params: list
    graph: ConstraintGraph
    model: object
    state: SystemState
    integrator: IntegratorConfig
    raw: dict


def _need(table, key, where):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in {where}")
    return table[key]


def _floats(value, count, where):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a list of {count} numbers") from None
    if arr.shape != (count,):
        raise ConfigError(f"{where} must have exactly {count} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{where} has non-finite entries")
    return arr


def _scalar(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number")
    return float(value)


def load_scenario(path):
    """Parse and validate a scenario file. TOML syntax errors propagate."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    scen = raw.get("scenario")
    if not isinstance(scen, dict):
        raise ConfigError("missing [scenario] table")
    group = _need(scen, "group", "[scenario]")
    if group not in (groups.SE2, groups.SE3):
        raise ConfigError(f"scenario.group must be 'SE2' or 'SE3', got {group!r}")
    kind_name = scen.get("constraint_kind", _DEFAULT_KIND[group])
    if kind_name not in _KINDS:
        raise ConfigError(
            f"scenario.constraint_kind must be one of {sorted(_KINDS)}, got {kind_name!r}")
    kind = _KINDS[kind_name]
    if constraints._KIND_GROUP[kind] != group:
        raise ConfigError(
            f"constraint kind {kind_name!r} does not apply to group {group}")
    convention = scen.get("force_sign_convention", "variational")
    if convention not in ("variational", "as_printed"):
        raise ConfigError(
            "scenario.force_sign_convention must be 'variational' or 'as_printed', "
            f"got {convention!r}")

    agents = raw.get("agents")
    if not isinstance(agents, list) or not agents:
        raise ConfigError("need at least one [[agents]] block")
    edges_raw = raw.get("constraints", [])
    if not isinstance(edges_raw, list):
        raise ConfigError("[[constraints]] must be an array of tables")
    pairs = []
    for idx, tab in enumerate(edges_raw):
        where = f"[[constraints]] entry {idx + 1}"
        i = _need(tab, "i", where)
        j = _need(tab, "j", where)
        dist = _scalar(_need(tab, "distance", where), f"{where}.distance")
        if not isinstance(i, int) or not isinstance(j, int):
            raise ConfigError(f"{where}: i and j must be integers")
        if not (1 <= i <= len(agents)) or not (1 <= j <= len(agents)):
            raise ConfigError(
                f"{where}: agent labels must be between 1 and {len(agents)}")
        if i == j:
            raise ConfigError(f"{where}: i and j must differ")
        if dist <= 0:
            raise ConfigError(f"{where}.distance must be positive")
        pairs.append((min(i, j) - 1, max(i, j) - 1, dist))

    if group == groups.SE3:
        params, g, xi = _parse_se3_agents(agents)
        radii = [p.radius for p in params]
        model = auv_model(params, convention)
    else:
        params, g, xi = _parse_se2_agents(agents)
        radii = None
        model = None
    graph = ConstraintGraph.from_distances(len(agents), pairs, kind, radii=radii)
    state = SystemState(g=g, xi=xi, t=0.0)

    integ = None
    if "integrator" in raw:
        tab = raw["integrator"]
        method = tab.get("method", "lie_euler")
        h = _scalar(_need(tab, "h", "[integrator]"), "integrator.h")
        steps = _need(tab, "steps", "[integrator]")
        if not isinstance(steps, int):
            raise ConfigError("integrator.steps must be an integer")
        record_every = tab.get("record_every", 1)
        if not isinstance(record_every, int):
            raise ConfigError("integrator.record_every must be an integer")
        try:
            integ = IntegratorConfig(h=h, steps=steps, method=method,
                                     record_every=record_every)
        except ValueError as exc:
            raise ConfigError(f"[integrator]: {exc}") from None

    return Scenario(path=str(path), group_tag=group, sign_convention=convention,
                    params=params, graph=graph, model=model, state=state,
                    integrator=integ, raw=raw)


def _parse_se3_agents(agents):
    params = []
    gs = []
    coords = np.zeros((len(agents), 6))
    for idx, tab in enumerate(agents):
        where = f"[[agents]] entry {idx + 1}"
        try:
            p = AuvParams(
                mass=_scalar(_need(tab, "mass", where), f"{where}.mass"),
                added_mass=tuple(_floats(_need(tab, "added_mass", where), 3,
                                         f"{where}.added_mass")),
                inertia=tuple(_floats(_need(tab, "inertia", where), 3,
                                      f"{where}.inertia")),
                buoyancy_force=_scalar(_need(tab, "buoyancy_force", where),
                                       f"{where}.buoyancy_force"),
                buoyancy_offset=tuple(_floats(_need(tab, "buoyancy_offset", where), 3,
                                              f"{where}.buoyancy_offset")),
                radius=_scalar(_need(tab, "radius", where), f"{where}.radius"),
                gravity=_scalar(tab.get("gravity", 9.81), f"{where}.gravity"),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{where}: {exc}") from None
        params.append(p)
        position = _floats(_need(tab, "position", where), 3, f"{where}.position")
        if "rotation" in tab:
            R = _floats(tab["rotation"], 9, f"{where}.rotation").reshape(3, 3)
        else:
            R = np.eye(3)
        try:
            g = GroupElement.from_parts(groups.SE3, R, position)
        except ValueError as exc:
            raise ConfigError(f"{where}.rotation: {exc}") from None
        gs.append(g)
        if "velocity_world" in tab and "velocity_body" in tab:
            raise ConfigError(f"{where}: give velocity_world or velocity_body, not both")
        if "velocity_world" in tab:
            v = _floats(tab["velocity_world"], 3, f"{where}.velocity_world")
            coords[idx, :3] = g.rotation.T @ v
        elif "velocity_body" in tab:
            coords[idx, :3] = _floats(tab["velocity_body"], 3, f"{where}.velocity_body")
        if "angular_velocity" in tab:
            coords[idx, 3:] = _floats(tab["angular_velocity"], 3,
                                      f"{where}.angular_velocity")
    g = ProductElement(gs)
    xi = ProductAlgebraElement(groups.SE3, coords)
    return params, g, xi


def _parse_se2_agents(agents):
    gs = []
    for idx, tab in enumerate(agents):
        where = f"[[agents]] entry {idx + 1}"
        pose = _floats(_need(tab, "pose", where), 3, f"{where}.pose")
        gs.append(groups.se2_from_pose(pose[0], pose[1], pose[2]))
    g = ProductElement(gs)
    xi = ProductAlgebraElement(groups.SE2, np.zeros((len(agents), 3)))
    return [None] * len(agents), g, xi
