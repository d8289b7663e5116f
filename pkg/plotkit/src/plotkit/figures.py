"""Figure construction for trajectory runs.

Four kinds:

    traj3d_compare    two 3D panels, one per run directory (a second
                      run is required), center curves per agent
    traj3d_views      one run from four viewpoints: a 3D view plus the
                      three axis-aligned projections
    euler_angles      yaw/pitch/roll per agent over time, ZYX convention
    angular_velocity  body angular velocity components per agent

Rendering is deterministic: the Agg backend, a pinned style sheet and
fixed metadata make repeated renders of the same input byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .reader import euler_zyx, read_run

KINDS = ("traj3d_compare", "traj3d_views", "euler_angles", "angular_velocity")
STYLE = Path(__file__).parent / "plotkit.mplstyle"


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: run directory, figure kind and output path."""

    traj: str
    kind: str
    out: str
    traj2: str = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "traj3d_compare" and self.traj2 is None:
            raise ValueError("traj3d_compare needs a second run directory (traj2)")


def _plot_centers_3d(ax, run, title):
    for i in range(run.agents):
        ax.plot(run.positions[:, i, 0], run.positions[:, i, 1],
                run.positions[:, i, 2], label=f"agent {i + 1}")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")
    ax.set_title(title)
    ax.legend()


def _fig_traj3d_compare(spec):
    run1 = read_run(spec.traj)
    run2 = read_run(spec.traj2)
    fig = plt.figure()
    ax1 = fig.add_subplot(1, 2, 1, projection="3d")
    ax2 = fig.add_subplot(1, 2, 2, projection="3d")
    _plot_centers_3d(ax1, run1, Path(spec.traj).name)
    _plot_centers_3d(ax2, run2, Path(spec.traj2).name)
    fig.suptitle("center trajectories")
    return fig


def _fig_traj3d_views(spec):
    run = read_run(spec.traj)
    fig = plt.figure()
    ax = fig.add_subplot(2, 2, 1, projection="3d")
    _plot_centers_3d(ax, run, "3D view")
    planes = (("x [m]", "y [m]", 0, 1), ("x [m]", "z [m]", 0, 2),
              ("y [m]", "z [m]", 1, 2))
    for idx, (xl, yl, a, b) in enumerate(planes, start=2):
        ax = fig.add_subplot(2, 2, idx)
        for i in range(run.agents):
            ax.plot(run.positions[:, i, a], run.positions[:, i, b],
                    label=f"agent {i + 1}")
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.set_aspect("equal", adjustable="datalim")
    fig.suptitle("center trajectories, axis views")
    return fig


def _stacked_time_series(times, series, labels, ylabels, suptitle):
    # series has shape (K, agents, 3); one axes per component
    fig, axes = plt.subplots(3, 1, sharex=True)
    for c, ax in enumerate(axes):
        for i in range(series.shape[1]):
            ax.plot(times, series[:, i, c], label=labels[i])
        ax.set_ylabel(ylabels[c])
    axes[-1].set_xlabel("t [s]")
    axes[0].legend(loc="upper right", ncol=min(series.shape[1], 3))
    fig.suptitle(suptitle)
    return fig


def _fig_euler_angles(spec):
    run = read_run(spec.traj)
    angles = euler_zyx(run.rotations)
    labels = [f"agent {i + 1}" for i in range(run.agents)]
    return _stacked_time_series(
        run.times, angles, labels,
        ("yaw [rad]", "pitch [rad]", "roll [rad]"),
        "attitude, ZYX (yaw-pitch-roll) Euler angles")


def _fig_angular_velocity(spec):
    run = read_run(spec.traj)
    labels = [f"agent {i + 1}" for i in range(run.agents)]
    return _stacked_time_series(
        run.times, run.angular_velocity, labels,
        (r"$\Omega_1$ [rad/s]", r"$\Omega_2$ [rad/s]", r"$\Omega_3$ [rad/s]"),
        "body angular velocity")


_BUILDERS = {
    "traj3d_compare": _fig_traj3d_compare,
    "traj3d_views": _fig_traj3d_views,
    "euler_angles": _fig_euler_angles,
    "angular_velocity": _fig_angular_velocity,
}


def build_figure(spec: FigureSpec):
    """The matplotlib Figure for a spec, styled but not yet saved."""
    with plt.style.context(str(STYLE)):
        return _BUILDERS[spec.kind](spec)


def render(spec: FigureSpec):
    """Build and write the figure; returns the output path."""
    fig = build_figure(spec)
    try:
        fig.savefig(spec.out, format="png", metadata={"Software": "plotkit"})
    finally:
        plt.close(fig)
    return spec.out
