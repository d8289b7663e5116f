"""Scenario file parsing and validation."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from geofeas import config, constraints, groups
from geofeas.config import ConfigError, load_scenario


def _write(tmp_path, text, name="case.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


MINIMAL_SE3 = """
[scenario]
group = "SE3"

[[agents]]
mass = 123.8
added_mass = [65.0, 70.0, 75.0]
inertia = [5.46, 5.29, 5.72]
buoyancy_force = 1215.8
buoyancy_offset = [0.0, 0.0, -0.007]
radius = 1.0
position = [0.0, 0.0, 0.0]
{agent1_extra}

[[agents]]
mass = 123.8
added_mass = [65.0, 70.0, 75.0]
inertia = [5.46, 5.29, 5.72]
buoyancy_force = 1215.8
buoyancy_offset = [0.0, 0.0, -0.007]
radius = 1.0
position = [10.0, 0.0, 0.0]

[[constraints]]
i = 1
j = 2
distance = 8.0
"""


def _se3_text(agent1_extra=""):
    return MINIMAL_SE3.format(agent1_extra=agent1_extra)


def test_bundled_presets_load(preset_dir):
    for name in ("auv3.cfg", "auv3_engaged.cfg"):
        sc = load_scenario(preset_dir / name)
        assert sc.group_tag == groups.SE3
        assert sc.graph.m == 3
        assert sc.graph.target_distance(sc.graph.edges[0]) == 12.0
        assert sc.integrator is not None
        assert sc.integrator.h == 0.005
        assert len(sc.params) == 3
        values = constraints.constraint_value(sc.graph, sc.state.g)
        assert np.max(np.abs(values)) <= 1e-10

    tri = load_scenario(preset_dir / "triangle.cfg")
    assert tri.group_tag == groups.SE2
    assert tri.graph.kind == constraints.SE2_FROBENIUS
    assert tri.model is None
    assert tri.integrator is None


def test_minimal_scenario(tmp_path):
    sc = load_scenario(_write(tmp_path, _se3_text()))
    assert sc.graph.m == 1
    # surface distance plus both radii
    assert sc.graph.target_distance(sc.graph.edges[0]) == 10.0
    assert sc.sign_convention == "variational"
    assert sc.integrator is None
    assert_allclose(np.asarray(sc.state.xi.coords), np.zeros((2, 6)))


def test_world_velocity_rotated_into_body_frame(tmp_path):
    # quarter turn about z: world x becomes body -y
    extra = ('rotation = [0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]\n'
             'velocity_world = [1.0, 0.0, 0.0]')
    sc = load_scenario(_write(tmp_path, _se3_text(extra)))
    assert_allclose(np.asarray(sc.state.xi.coords)[0, :3], [0.0, -1.0, 0.0],
                    atol=1e-15)


def test_body_velocity_taken_verbatim(tmp_path):
    extra = 'velocity_body = [0.3, 0.0, 0.1]\nangular_velocity = [0.0, 0.2, 0.0]'
    sc = load_scenario(_write(tmp_path, _se3_text(extra)))
    assert_allclose(np.asarray(sc.state.xi.coords)[0], [0.3, 0.0, 0.1, 0.0, 0.2, 0.0])


def test_both_velocity_forms_rejected(tmp_path):
    extra = 'velocity_world = [1.0, 0.0, 0.0]\nvelocity_body = [1.0, 0.0, 0.0]'
    with pytest.raises(ConfigError, match="not both"):
        load_scenario(_write(tmp_path, _se3_text(extra)))


def test_rotation_must_be_orthogonal(tmp_path):
    extra = 'rotation = [1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]'
    with pytest.raises(ConfigError, match="rotation"):
        load_scenario(_write(tmp_path, _se3_text(extra)))


def test_missing_scenario_table(tmp_path):
    with pytest.raises(ConfigError, match=r"\[scenario\]"):
        load_scenario(_write(tmp_path, "[integrator]\nh = 0.1\nsteps = 5\n"))


def test_bad_group_and_kind(tmp_path):
    with pytest.raises(ConfigError, match="group"):
        load_scenario(_write(tmp_path, _se3_text().replace('"SE3"', '"SU2"')))
    text = _se3_text().replace('group = "SE3"',
                               'group = "SE3"\nconstraint_kind = "banana"')
    with pytest.raises(ConfigError, match="constraint_kind"):
        load_scenario(_write(tmp_path, text))
    # a kind that exists but belongs to the other group
    text = _se3_text().replace('group = "SE3"',
                               'group = "SE3"\nconstraint_kind = "planar_frobenius"')
    with pytest.raises(ConfigError, match="does not apply"):
        load_scenario(_write(tmp_path, text))


def test_bad_sign_convention(tmp_path):
    text = _se3_text().replace('group = "SE3"',
                               'group = "SE3"\nforce_sign_convention = "flipped"')
    with pytest.raises(ConfigError, match="force_sign_convention"):
        load_scenario(_write(tmp_path, text))


def test_missing_agent_key_is_named(tmp_path):
    text = _se3_text().replace("mass = 123.8\n", "", 1)
    with pytest.raises(ConfigError, match="mass"):
        load_scenario(_write(tmp_path, text))


def test_wrong_vector_length_is_named(tmp_path):
    text = _se3_text().replace("added_mass = [65.0, 70.0, 75.0]",
                               "added_mass = [65.0, 70.0]", 1)
    with pytest.raises(ConfigError, match="added_mass"):
        load_scenario(_write(tmp_path, text))


def test_constraint_label_validation(tmp_path):
    text = _se3_text().replace("i = 1\nj = 2", "i = 0\nj = 2")
    with pytest.raises(ConfigError, match="between 1 and"):
        load_scenario(_write(tmp_path, text))
    text = _se3_text().replace("i = 1\nj = 2", "i = 2\nj = 2")
    with pytest.raises(ConfigError, match="differ"):
        load_scenario(_write(tmp_path, text))
    text = _se3_text().replace("distance = 8.0", "distance = -1.0")
    with pytest.raises(ConfigError, match="positive"):
        load_scenario(_write(tmp_path, text))


def test_reversed_labels_normalized(tmp_path):
    text = _se3_text().replace("i = 1\nj = 2", "i = 2\nj = 1")
    sc = load_scenario(_write(tmp_path, text))
    edge = sc.graph.edges[0]
    assert (edge.i, edge.j) == (0, 1)


def test_integrator_table(tmp_path):
    text = _se3_text() + "\n[integrator]\nh = 0.01\nsteps = 100\nrecord_every = 5\n"
    sc = load_scenario(_write(tmp_path, text))
    assert sc.integrator.h == 0.01
    assert sc.integrator.steps == 100
    assert sc.integrator.record_every == 5
    assert sc.integrator.method == "lie_euler"

    bad = _se3_text() + "\n[integrator]\nh = 0.01\nsteps = 100\nmethod = 'rk45'\n"
    with pytest.raises(ConfigError, match=r"\[integrator\]"):
        load_scenario(_write(tmp_path, bad))
    bad = _se3_text() + "\n[integrator]\nh = 0.01\nsteps = 12.5\n"
    with pytest.raises(ConfigError, match="steps"):
        load_scenario(_write(tmp_path, bad))
    bad = _se3_text() + "\n[integrator]\nsteps = 100\n"
    with pytest.raises(ConfigError, match="h"):
        load_scenario(_write(tmp_path, bad))


def test_se2_agents_use_poses(tmp_path):
    text = """
[scenario]
group = "SE2"

[[agents]]
pose = [0.0, 0.0, 0.0]

[[agents]]
pose = [10.0, 0.0, 1.2]

[[constraints]]
i = 1
j = 2
distance = 10.0
"""
    sc = load_scenario(_write(tmp_path, text))
    assert sc.group_tag == groups.SE2
    assert sc.model is None
    assert sc.params == [None, None]
    assert_allclose(sc.state.g[1].translation, [10.0, 0.0])
    values = constraints.constraint_value(sc.graph, sc.state.g)
    assert np.max(np.abs(values)) <= 1e-12


def test_se2_agent_missing_pose(tmp_path):
    text = '[scenario]\ngroup = "SE2"\n\n[[agents]]\nx = 1.0\n'
    with pytest.raises(ConfigError, match="pose"):
        load_scenario(_write(tmp_path, text))


def test_toml_syntax_errors_propagate(tmp_path):
    with pytest.raises(config.TOMLError):
        load_scenario(_write(tmp_path, "[scenario\ngroup = SE3"))


def test_no_agents(tmp_path):
    with pytest.raises(ConfigError, match="agents"):
        load_scenario(_write(tmp_path, '[scenario]\ngroup = "SE3"\n'))
