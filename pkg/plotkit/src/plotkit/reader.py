"""Reader for the simulator's trajectory.csv schema.

The file layout is one header row and one record per line: a time
column, then an 18-column block per agent (position x/y/z, rotation
matrix row-major, linear velocity, angular velocity), then one
multiplier and one constraint-value column per constraint. Agent and
constraint counts are inferred from the header; any deviation from the
expected column sequence raises SchemaError naming the first offending
column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """trajectory.csv does not match the documented column layout."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


@dataclass(frozen=True)
class RunData:
    """Parsed trajectory arrays, indexed [record, agent, ...]."""

    times: np.ndarray
    positions: np.ndarray
    rotations: np.ndarray
    linear_velocity: np.ndarray
    angular_velocity: np.ndarray
    multipliers: np.ndarray
    constraint_values: np.ndarray

    @property
    def agents(self):
        return self.positions.shape[1]

    def __len__(self):
        return self.times.shape[0]


def expected_header(agents, constraints):
    cols = ["t"]
    for i in range(1, agents + 1):
        cols += [f"b{i}_x", f"b{i}_y", f"b{i}_z"]
        cols += [f"R{i}_{a}{b}" for a in (1, 2, 3) for b in (1, 2, 3)]
        cols += [f"nu{i}_1", f"nu{i}_2", f"nu{i}_3"]
        cols += [f"omega{i}_1", f"omega{i}_2", f"omega{i}_3"]
    cols += [f"lambda_{k}" for k in range(1, constraints + 1)]
    cols += [f"phi_{k}" for k in range(1, constraints + 1)]
    return cols


def _check_header(header):
    agents = len([c for c in header if re.fullmatch(r"b\d+_x", c)])
    constraints = len([c for c in header if re.fullmatch(r"lambda_\d+", c)])
    want = expected_header(agents, constraints)
    for pos, name in enumerate(want):
        if pos >= len(header):
            raise SchemaError(f"missing column {name!r} at position {pos + 1}",
                              column=name)
        if header[pos] != name:
            raise SchemaError(
                f"expected column {name!r} at position {pos + 1}, "
                f"found {header[pos]!r}", column=name)
    if len(header) > len(want):
        extra = header[len(want)]
        raise SchemaError(f"unexpected trailing column {extra!r}", column=extra)
    return agents, constraints


def read_run(traj_dir):
    """Load DIR/trajectory.csv into arrays."""
    path = Path(traj_dir) / "trajectory.csv"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found")
    with open(path, "r") as fh:
        header = fh.readline().strip().split(",")
        agents, constraints = _check_header(header)
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise SchemaError(
            f"rows have {data.shape[1]} fields, header has {len(header)}")
    K = data.shape[0]
    b = np.zeros((K, agents, 3))
    R = np.zeros((K, agents, 3, 3))
    nu = np.zeros((K, agents, 3))
    om = np.zeros((K, agents, 3))
    for i in range(agents):
        base = 1 + i * 18
        b[:, i] = data[:, base:base + 3]
        R[:, i] = data[:, base + 3:base + 12].reshape(K, 3, 3)
        nu[:, i] = data[:, base + 12:base + 15]
        om[:, i] = data[:, base + 15:base + 18]
    lam = data[:, 1 + agents * 18:1 + agents * 18 + constraints]
    phi = data[:, 1 + agents * 18 + constraints:1 + agents * 18 + 2 * constraints]
    return RunData(times=data[:, 0], positions=b, rotations=R,
                   linear_velocity=nu, angular_velocity=om,
                   multipliers=lam, constraint_values=phi)


def euler_zyx(R):
    """Yaw, pitch, roll (ZYX convention) from rotation matrices.

    Accepts an array of shape (..., 3, 3) and returns (..., 3) angles in
    radians, ordered (yaw, pitch, roll). Pitch is clipped into the asin
    domain to survive roundoff at the gimbal limits.
    """
    R = np.asarray(R)
    yaw = np.arctan2(R[..., 1, 0], R[..., 0, 0])
    pitch = -np.arcsin(np.clip(R[..., 2, 0], -1.0, 1.0))
    roll = np.arctan2(R[..., 2, 1], R[..., 2, 2])
    return np.stack([yaw, pitch, roll], axis=-1)
