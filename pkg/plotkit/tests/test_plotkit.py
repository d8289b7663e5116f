"""Rendering, schema validation and determinism of the figure tool."""

import shutil
import subprocess
import sys

import numpy as np
import pytest

from plotkit import FigureSpec, SchemaError, build_figure, euler_zyx, read_run, render
from plotkit.cli import main
from plotkit.reader import expected_header

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _spec(kind, run_dir, out, traj2=None):
    return FigureSpec(traj=str(run_dir), kind=kind, out=str(out),
                      traj2=None if traj2 is None else str(traj2))


def test_reader_shapes_and_values(run_dir):
    run = read_run(run_dir)
    assert run.agents == 3
    assert len(run) == 51
    assert run.positions.shape == (51, 3, 3)
    assert run.rotations.shape == (51, 3, 3, 3)
    assert run.multipliers.shape == (51, 3)
    # initial attitude is the identity, angular velocity as configured
    assert np.max(np.abs(run.rotations[0] - np.eye(3))) == 0.0
    for i in range(3):
        assert tuple(run.angular_velocity[0, i]) == (0.3, 0.2, 0.1)


@pytest.mark.parametrize("kind", ["traj3d_views", "euler_angles", "angular_velocity"])
def test_single_run_kinds_render(kind, run_dir, tmp_path):
    out = tmp_path / f"{kind}.png"
    render(_spec(kind, run_dir, out))
    data = out.read_bytes()
    assert data[:8] == PNG_MAGIC
    assert len(data) > 10_000


def test_compare_kind_renders_two_panels(run_dir, free_run_dir, tmp_path):
    out = tmp_path / "compare.png"
    spec = _spec("traj3d_compare", run_dir, out, traj2=free_run_dir)
    fig = build_figure(spec)
    panels = [ax for ax in fig.axes if ax.get_title()]
    assert len(panels) == 2
    for ax in panels:
        assert len(ax.lines) == 3
    render(spec)
    assert out.read_bytes()[:8] == PNG_MAGIC


def test_angular_velocity_initial_values_on_figure(run_dir):
    fig = build_figure(_spec("angular_velocity", run_dir, "unused.png"))
    axes = [ax for ax in fig.axes if ax.lines]
    assert len(axes) == 3
    for ax, want in zip(axes, (0.3, 0.2, 0.1)):
        assert len(ax.lines) == 3
        for line in ax.lines:
            assert line.get_ydata()[0] == want
            assert line.get_xdata()[0] == 0.0


def test_euler_angles_constant_rotation_gives_flat_lines(tmp_path):
    c, s = np.cos(0.4), np.sin(0.4)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    header = expected_header(1, 0)
    rows = []
    for k in range(5):
        row = [0.01 * k, 1.0 * k, 0.0, 0.0]
        row += list(R.reshape(-1)) + [0.0] * 6
        rows.append(",".join(format(x, ".17g") for x in row))
    run = tmp_path / "steady"
    run.mkdir()
    (run / "trajectory.csv").write_text(
        ",".join(header) + "\n" + "\n".join(rows) + "\n")

    angles = euler_zyx(read_run(run).rotations)
    assert np.allclose(angles[:, 0, 0], 0.4, atol=1e-12)

    fig = build_figure(_spec("euler_angles", run, "unused.png"))
    for ax in fig.axes:
        for line in ax.lines:
            y = line.get_ydata()
            assert np.max(y) - np.min(y) == 0.0


def test_reruns_are_byte_identical(run_dir, tmp_path):
    outs = []
    for name in ("one.png", "two.png"):
        out = tmp_path / name
        render(_spec("angular_velocity", run_dir, out))
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_schema_mismatch_names_the_column(run_dir, tmp_path, capsys):
    broken = tmp_path / "broken"
    broken.mkdir()
    text = (run_dir / "trajectory.csv").read_text()
    (broken / "trajectory.csv").write_text(text.replace("b1_x", "q1_x", 1))

    with pytest.raises(SchemaError) as err:
        read_run(broken)
    assert err.value.column == "b1_x"

    code = main(["render", "--kind", "euler_angles", "--traj", str(broken),
                 "--out", str(tmp_path / "x.png")])
    assert code == 1
    assert "b1_x" in capsys.readouterr().err


def test_truncated_header_is_rejected(run_dir, tmp_path):
    broken = tmp_path / "short"
    broken.mkdir()
    lines = (run_dir / "trajectory.csv").read_text().splitlines()
    cols = lines[0].split(",")
    (broken / "trajectory.csv").write_text(
        ",".join(cols[:-1]) + "\n")
    with pytest.raises(SchemaError) as err:
        read_run(broken)
    assert err.value.column == "phi_3"


def test_cli_error_paths(run_dir, tmp_path, capsys):
    missing = tmp_path / "nothing"
    missing.mkdir()
    code = main(["render", "--kind", "euler_angles", "--traj", str(missing),
                 "--out", str(tmp_path / "x.png")])
    assert code == 1
    assert "trajectory.csv" in capsys.readouterr().err

    code = main(["render", "--kind", "traj3d_compare", "--traj", str(run_dir),
                 "--out", str(tmp_path / "x.png")])
    assert code == 1
    assert "second run" in capsys.readouterr().err


def test_module_entry_point(run_dir, tmp_path):
    out = tmp_path / "cli.png"
    proc = subprocess.run(
        [sys.executable, "-m", "plotkit.cli", "render", "--kind", "traj3d_views",
         "--traj", str(run_dir), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.read_bytes()[:8] == PNG_MAGIC
