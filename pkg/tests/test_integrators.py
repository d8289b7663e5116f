"""Steppers: hand-checked updates, convergence rates, recording, drift."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from geofeas import constraints, dynamics, groups, integrators
from geofeas.constraints import ConstraintGraph
from geofeas.dynamics import LagrangianModel
from geofeas.errors import InfeasibleStateError, SingularConstraintError
from geofeas.groups import GroupElement, ProductAlgebraElement, ProductElement
from geofeas.integrators import IntegratorConfig, SystemState, Trajectory, run_simulation
from helpers import feasible_auv_state, random_rotation


def _free_body(nu=(0.1, 0.2, 1.0), omega=(0.0, 0.0, 0.0)):
    inertia = np.zeros((6, 6))
    inertia[:3, :3] = np.diag([2.0, 3.0, 4.0])
    inertia[3:, 3:] = np.diag([1.0, 2.0, 3.0])
    model = LagrangianModel(groups.SE3, [inertia])
    g = ProductElement([groups.identity(groups.SE3)])
    xi = ProductAlgebraElement(groups.SE3, np.array([list(nu) + list(omega)]))
    return model, SystemState(g=g, xi=xi)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(h=0.0, steps=10)
    with pytest.raises(ValueError):
        IntegratorConfig(h=0.01, steps=0)
    with pytest.raises(ValueError):
        IntegratorConfig(h=0.01, steps=10, method="rk4")
    with pytest.raises(ValueError):
        IntegratorConfig(h=0.01, steps=10, record_every=0)
    with pytest.raises(ValueError):
        IntegratorConfig(h=0.01, steps=10, backend="gpu")
    cfg = IntegratorConfig(h=0.01, steps=10.0)
    assert cfg.steps == 10 and isinstance(cfg.steps, int)


def test_state_validation():
    g = ProductElement([groups.identity(groups.SE3)])
    xi2 = ProductAlgebraElement(groups.SE3, np.zeros((2, 6)))
    with pytest.raises(ValueError):
        SystemState(g=g, xi=xi2)
    xi_se2 = ProductAlgebraElement(groups.SE2, np.zeros((1, 3)))
    with pytest.raises(ValueError):
        SystemState(g=g, xi=xi_se2)


def test_agent_count_must_match_model():
    model, state = _free_body()
    two = ProductElement([groups.identity(groups.SE3)] * 2)
    xi = ProductAlgebraElement(groups.SE3, np.zeros((2, 6)))
    cfg = IntegratorConfig(h=0.01, steps=1, backend="object")
    with pytest.raises(ValueError):
        run_simulation(model, None, SystemState(g=two, xi=xi), cfg)


@pytest.mark.parametrize("method", ["euler", "lie_euler"])
def test_single_step_translation_by_hand(method):
    # no rotation rate, so one step of size 0.005 moves the body by
    # exactly h * nu regardless of the method
    model, state = _free_body(nu=(0.1, 0.2, 1.0))
    cfg = IntegratorConfig(h=0.005, steps=1, method=method, backend="object")
    traj = run_simulation(model, None, state, cfg)
    assert len(traj) == 2
    assert_allclose(traj.matrices[1, 0, :3, 3], [0.0005, 0.001, 0.005], rtol=1e-15)
    assert_allclose(traj.matrices[1, 0, :3, :3], np.eye(3), atol=1e-15)


def test_rest_state_stays_at_rest():
    model, state = _free_body(nu=(0.0, 0.0, 0.0))
    cfg = IntegratorConfig(h=0.01, steps=50, backend="object")
    traj = run_simulation(model, None, state, cfg)
    assert np.max(np.abs(traj.xi)) == 0.0
    for k in range(len(traj)):
        assert_array_equal(traj.matrices[k, 0], np.eye(4))
    assert np.max(np.abs(traj.energy - traj.energy[0])) == 0.0


def test_euler_and_lie_euler_differ_at_second_order():
    diffs = []
    for h in (0.02, 0.01):
        finals = []
        for method in ("euler", "lie_euler"):
            model, state = _free_body(nu=(0.1, 0.2, 1.0), omega=(0.3, 0.2, 0.1))
            cfg = IntegratorConfig(h=h, steps=1, method=method, backend="object")
            traj = run_simulation(model, None, state, cfg)
            finals.append(traj.matrices[1, 0])
        diffs.append(np.linalg.norm(finals[0] - finals[1]))
    ratio = diffs[1] / diffs[0]
    assert 0.2 <= ratio <= 0.3


def test_lie_euler_keeps_rotations_orthogonal():
    model, state = _free_body(nu=(0.1, 0.2, 1.0), omega=(0.3, 0.2, 0.1))
    cfg = IntegratorConfig(h=0.01, steps=500, backend="object")
    traj = run_simulation(model, None, state, cfg)
    assert traj.max_ortho <= 1e-10


def test_global_order_one_on_constrained_problem():
    rng = np.random.default_rng(60)
    params, model, graph, state = feasible_auv_state(rng)
    finals = []
    for h, steps in ((0.01, 50), (0.005, 100), (0.0025, 200)):
        cfg = IntegratorConfig(h=h, steps=steps, record_every=steps, backend="object")
        traj = run_simulation(model, graph, state, cfg)
        finals.append(traj.matrices[-1, :, :3, 3].copy())
    err_coarse = np.linalg.norm(finals[0] - finals[1])
    err_fine = np.linalg.norm(finals[1] - finals[2])
    assert 0.35 <= err_fine / err_coarse <= 0.65


def test_constraint_rate_drift_halves_with_step():
    rng = np.random.default_rng(61)
    params, model, graph, state = feasible_auv_state(rng)
    drifts = []
    for h, steps in ((0.01, 100), (0.005, 200)):
        cfg = IntegratorConfig(h=h, steps=steps, record_every=steps, backend="object")
        traj = run_simulation(model, graph, state, cfg)
        drifts.append(traj.max_distance_drift)
    assert 0.3 <= drifts[1] / drifts[0] <= 0.7


def test_energy_error_first_order_on_free_body():
    errs = []
    for h, steps in ((0.01, 200), (0.005, 400)):
        model, state = _free_body(nu=(0.1, 0.2, 1.0), omega=(0.9, 0.5, 0.3))
        cfg = IntegratorConfig(h=h, steps=steps, backend="object")
        traj = run_simulation(model, None, state, cfg)
        errs.append(np.max(np.abs(traj.energy - traj.energy[0])))
    assert 0.3 <= errs[1] / errs[0] <= 0.7


def test_record_schedule():
    model, state = _free_body()
    cfg = IntegratorConfig(h=0.01, steps=100, record_every=10, backend="object")
    traj = run_simulation(model, None, state, cfg)
    assert len(traj) == 11
    assert_allclose(traj.times, 0.01 * 10 * np.arange(11), atol=1e-14)

    # a remainder appends the final state as an extra record
    model, state = _free_body()
    cfg = IntegratorConfig(h=0.01, steps=25, record_every=10, backend="object")
    traj = run_simulation(model, None, state, cfg)
    assert len(traj) == 4
    assert_allclose(traj.times, [0.0, 0.1, 0.2, 0.25], atol=1e-14)


def test_runs_are_deterministic():
    rng = np.random.default_rng(62)
    params, model, graph, state = feasible_auv_state(rng)
    cfg = IntegratorConfig(h=0.005, steps=80, backend="object")
    a = run_simulation(model, graph, state, cfg)
    b = run_simulation(model, graph, state, cfg)
    for name in ("matrices", "xi", "xidot", "lam", "phi", "dphi", "energy", "momentum"):
        assert_array_equal(getattr(a, name), getattr(b, name))


def test_duplicate_edges_fail_at_step_zero():
    model, state = _free_body()
    model = LagrangianModel(groups.SE3, [model.inertias[0]] * 2)
    g = ProductElement([
        groups.identity(groups.SE3),
        GroupElement.from_parts(groups.SE3, np.eye(3), [5.0, 0.0, 0.0]),
    ])
    xi = ProductAlgebraElement(groups.SE3, np.zeros((2, 6)))
    doubled = ConstraintGraph.from_distances(
        2, [(0, 1, 5.0), (0, 1, 5.0)], constraints.SE3_CENTER_DISTANCE)
    cfg = IntegratorConfig(h=0.01, steps=10, backend="object")
    with pytest.raises(SingularConstraintError) as err:
        run_simulation(model, doubled, SystemState(g=g, xi=xi), cfg)
    assert err.value.step_index == 0


def test_infeasible_initial_state_names_the_constraint():
    model, state = _free_body()
    model = LagrangianModel(groups.SE3, [model.inertias[0]] * 2)
    g = ProductElement([
        groups.identity(groups.SE3),
        GroupElement.from_parts(groups.SE3, np.eye(3), [6.0, 0.0, 0.0]),
    ])
    xi = ProductAlgebraElement(groups.SE3, np.zeros((2, 6)))
    graph = ConstraintGraph.from_distances(
        2, [(0, 1, 5.0)], constraints.SE3_CENTER_DISTANCE)
    cfg = IntegratorConfig(h=0.01, steps=10, backend="object")
    with pytest.raises(InfeasibleStateError) as err:
        run_simulation(model, graph, SystemState(g=g, xi=xi), cfg)
    assert "k=1" in str(err.value)
    assert "agents 1 and 2" in str(err.value)


def test_frozen_multipliers_drift_more():
    rng = np.random.default_rng(63)
    params, model, graph, state = feasible_auv_state(rng)
    results = {}
    for refresh in (True, False):
        cfg = IntegratorConfig(h=0.005, steps=400, record_every=400,
                               refresh_multipliers=refresh, backend="object")
        results[refresh] = run_simulation(model, graph, state, cfg)
    assert results[False].max_distance_drift > results[True].max_distance_drift
    # frozen multipliers are recorded unchanged over the whole run
    assert_array_equal(results[False].lam[0], results[False].lam[-1])


def test_position_projection_pins_constraint_values():
    rng = np.random.default_rng(64)
    params, model, graph, state = feasible_auv_state(rng)
    cfg = IntegratorConfig(h=0.005, steps=300, record_every=300,
                           project_positions=True, backend="object")
    traj = run_simulation(model, graph, state, cfg)
    assert traj.max_abs_phi <= 1e-8


def test_external_forces_shape_checked():
    model, state = _free_body()
    cfg = IntegratorConfig(h=0.01, steps=10, backend="object")
    with pytest.raises(ValueError):
        run_simulation(model, None, state, cfg,
                       external_forces=np.zeros((10, 1, 6)))


def test_external_forces_accelerate_free_body():
    model, state = _free_body(nu=(0.0, 0.0, 0.0))
    steps = 20
    forces = np.zeros((steps + 1, 1, 6))
    forces[:, 0, 0] = 2.0  # constant surge force against mass 2
    cfg = IntegratorConfig(h=0.01, steps=steps, backend="object")
    traj = run_simulation(model, None, state, cfg, external_forces=forces)
    assert_allclose(traj.xi[-1, 0, 0], 0.01 * steps * 2.0 / 2.0, rtol=1e-12)


def test_unconstrained_run_records_empty_multipliers():
    model, state = _free_body()
    cfg = IntegratorConfig(h=0.01, steps=5, backend="object")
    traj = run_simulation(model, None, state, cfg)
    assert traj.lam.shape == (6, 0)
    assert traj.phi.shape == (6, 0)
    assert traj.max_abs_phi == 0.0


def test_enforce_constraints_off_leaves_motion_free():
    rng = np.random.default_rng(65)
    params, model, graph, state = feasible_auv_state(rng)
    cfg_off = IntegratorConfig(h=0.005, steps=50, enforce_constraints=False,
                               backend="object")
    traj_off = run_simulation(model, graph, state, cfg_off)
    assert np.max(np.abs(traj_off.lam)) == 0.0
    traj_free = run_simulation(model, None, state,
                               IntegratorConfig(h=0.005, steps=50, backend="object"))
    assert_allclose(traj_off.xi, traj_free.xi, atol=1e-14)
    # phi is still measured even though nothing enforces it
    assert traj_off.phi.shape[1] == graph.m


def test_state_round_trip():
    model, state = _free_body(nu=(0.1, 0.2, 1.0), omega=(0.3, 0.2, 0.1))
    cfg = IntegratorConfig(h=0.005, steps=40, record_every=8, backend="object")
    traj = run_simulation(model, None, state, cfg)
    mid = traj.state_at(3)
    assert mid.t == pytest.approx(0.005 * 24)
    assert_allclose(np.asarray(mid.xi.coords), traj.xi[3], atol=0)
    end = traj.final_state()
    assert end.t == pytest.approx(0.005 * 40)
    retraj = run_simulation(model, None, mid,
                            IntegratorConfig(h=0.005, steps=16, backend="object"))
    assert_allclose(retraj.matrices[-1], traj.matrices[-1], atol=1e-12)
