"""Random-state generators shared across test modules."""

import numpy as np

from geofeas import auv, constraints, groups
from geofeas.constraints import ConstraintGraph
from geofeas.groups import GroupElement, ProductAlgebraElement, ProductElement
from geofeas.integrators import SystemState


def random_rotation(rng, dim=3):
    return groups._project_rotation(rng.normal(size=(dim, dim)))


def random_group_element(rng, tag):
    if tag == groups.SO3:
        return GroupElement.from_parts(tag, random_rotation(rng))
    if tag == groups.SE2:
        return GroupElement.from_parts(tag, random_rotation(rng, 2),
                                       rng.normal(size=2))
    return GroupElement.from_parts(tag, random_rotation(rng),
                                   rng.normal(size=3))


def random_algebra(rng, tag, scale=1.0):
    n = groups.algebra_dim(tag)
    return groups.AlgebraElement(tag, scale * rng.normal(size=n))


def random_coalgebra(rng, tag, scale=1.0):
    n = groups.algebra_dim(tag)
    return groups.CoAlgebraElement(tag, scale * rng.normal(size=n))


def se2_triangle(rng=None, side=10.0):
    """Equilateral SE(2) triangle with three pairwise distance constraints.

    Headings are random when an rng is passed, zero otherwise.
    """
    pts = np.array([
        [0.0, 0.0],
        [side, 0.0],
        [side / 2.0, side * np.sqrt(3.0) / 2.0],
    ])
    headings = np.zeros(3) if rng is None else rng.uniform(-np.pi, np.pi, 3)
    g = ProductElement([
        groups.se2_from_pose(p[0], p[1], th) for p, th in zip(pts, headings)
    ])
    graph = ConstraintGraph.from_distances(
        3, [(0, 1, side), (0, 2, side), (1, 2, side)],
        constraints.SE2_FROBENIUS)
    return graph, g


def feasible_auv_state(rng, scale=0.4):
    """Three-vehicle state satisfying positions and velocity rates exactly.

    The reference triangle is rigidly transformed by a random rotation
    plus shift, attitudes are random, and the stacked body velocity is
    projected onto the kernel of the trivialized constraint rows.
    Returns (params, model, graph, state).
    """
    params, model, graph, _ = auv.three_vehicle_scenario()
    pos = auv.three_vehicle_positions()
    Q = random_rotation(rng)
    shift = 2.0 * rng.normal(size=3)
    g = ProductElement([
        GroupElement.from_parts(groups.SE3, random_rotation(rng), Q @ p + shift)
        for p in pos
    ])
    rows = constraints.constraint_gradients(graph, g).trivialized_rows
    _, _, Vt = np.linalg.svd(rows)
    null = Vt[3:]
    xi = null.T @ (null @ (scale * rng.normal(size=18)))
    state = SystemState(g=g, xi=ProductAlgebraElement(groups.SE3, xi.reshape(3, 6)))
    return params, model, graph, state
