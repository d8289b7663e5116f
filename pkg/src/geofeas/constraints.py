"""Holonomic inter-agent constraints and their gradients.

Two constraint kinds are supported:

    SE2_FROBENIUS        phi = ||psi(g_j) g_i||_F^2 - (d^2 + 3)
    SE3_CENTER_DISTANCE  phi = ||b_i - b_j||^2 - (r_i + r_j + d)^2

The SE(2) form measures the squared Frobenius norm of the relative
configuration and reduces algebraically to the squared planar distance
between the two positions, so both kinds pin a center-to-center
distance. Gradients are produced in ambient (matrix-space) form and as
left-trivialized rows on the stacked Lie algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import groups
from .groups import GroupElement, ProductElement

SE2_FROBENIUS = "SE2_FROBENIUS"
SE3_CENTER_DISTANCE = "SE3_CENTER_DISTANCE"

_KIND_GROUP = {SE2_FROBENIUS: groups.SE2, SE3_CENTER_DISTANCE: groups.SE3}


@dataclass(frozen=True)
class Edge:
    """One distance constraint between agents ``i`` and ``j`` (0-based, i < j).

    ``k`` is the 1-based constraint label used in reports and CSV
    columns; ``d`` is the prescribed separation in meters.
    """

    i: int
    j: int
    k: int
    d: float


class ConstraintGraph:
    """Undirected edge set with per-edge distances and per-agent radii.

    Edges are stored sorted lexicographically by (i, j, k); this fixes
    the meaning of multiplier components everywhere downstream.
    """

    def __init__(self, r, edges, kind, radii=None):
        if kind not in _KIND_GROUP:
            raise ValueError(f"unknown constraint kind {kind!r}")
        if r < 1:
            raise ValueError("agent count must be positive")
        norm = []
        for e in edges:
            if isinstance(e, Edge):
                i, j, k, d = e.i, e.j, e.k, e.d
            else:
                i, j, k, d = e
            if not (0 <= i < j < r):
                raise ValueError(f"edge ({i}, {j}) needs 0 <= i < j < {r}")
            if d <= 0:
                raise ValueError(f"edge ({i}, {j}) distance must be positive, got {d}")
            norm.append(Edge(int(i), int(j), int(k), float(d)))
        self.r = int(r)
        self.kind = kind
        self.edges = tuple(sorted(norm, key=lambda e: (e.i, e.j, e.k)))
        if radii is None:
            radii = np.zeros(r)
        radii = np.asarray(radii, dtype=float)
        if radii.shape != (r,):
            raise ValueError(f"radii must have shape ({r},)")
        if kind == SE3_CENTER_DISTANCE and np.any(radii < 0):
            raise ValueError("radii must be non-negative")
        self.radii = radii

    @classmethod
    def from_distances(cls, r, pairs, kind, radii=None):
        """Build a graph from (i, j, d) triples; labels k are assigned 1..m
        in lexicographic (i, j) order."""
        ordered = sorted(pairs, key=lambda p: (p[0], p[1]))
        edges = [Edge(i, j, k + 1, d) for k, (i, j, d) in enumerate(ordered)]
        return cls(r, edges, kind, radii=radii)

    @property
    def m(self):
        """Total number of scalar constraints."""
        return len(self.edges)

    @property
    def group_tag(self):
        return _KIND_GROUP[self.kind]

    def target_distance(self, edge: Edge):
        """Center-to-center distance the edge prescribes."""
        if self.kind == SE3_CENTER_DISTANCE:
            return self.radii[edge.i] + self.radii[edge.j] + edge.d
        return edge.d


def psi(g: GroupElement):
    """The SE(2) map sending (R, p) to the pure translation by -p."""
    if g.group_tag != groups.SE2:
        raise ValueError("psi is defined on SE(2) only")
    return GroupElement.from_parts(groups.SE2, np.eye(2), -g.translation)


def _positions(graph, g: ProductElement):
    return np.stack([gi.translation for gi in g])


def _check_config(graph, g):
    if len(g) != graph.r:
        raise ValueError(f"configuration has {len(g)} agents, graph expects {graph.r}")
    if g.group_tag != graph.group_tag:
        raise ValueError(f"graph kind {graph.kind} needs group {graph.group_tag}, got {g.group_tag}")


def constraint_value(graph: ConstraintGraph, g: ProductElement):
    """Stacked constraint values Phi(g) as an (m,) vector."""
    _check_config(graph, g)
    if graph.kind == SE2_FROBENIUS:
        out = np.empty(graph.m)
        for idx, e in enumerate(graph.edges):
            rel = psi(g[e.j]).matrix @ g[e.i].matrix
            out[idx] = np.sum(rel * rel) - (e.d**2 + 3.0)
        return out
    p = _positions(graph, g)
    out = np.empty(graph.m)
    for idx, e in enumerate(graph.edges):
        diff = p[e.i] - p[e.j]
        out[idx] = diff @ diff - graph.target_distance(e) ** 2
    return out


@dataclass(frozen=True)
class ConstraintEvaluation:
    """Constraint values with ambient and left-trivialized gradients.

    ``ambient_gradients[k][i]`` is the matrix-space gradient of
    constraint k with respect to agent i's homogeneous matrix (zero for
    agents not on the edge). ``trivialized_rows`` is the (m, r*n)
    matrix whose row k pairs with stacked body velocities to give
    d/dt phi_k.
    """

    values: np.ndarray
    ambient_gradients: np.ndarray
    trivialized_rows: np.ndarray


def _ambient_gradient_blocks(graph, g, e):
    """Matrix-space gradients (dphi/dg_i, dphi/dg_j) for one edge."""
    d = groups.matrix_dim(graph.group_tag)
    Gi = np.zeros((d, d))
    Gj = np.zeros((d, d))
    if graph.kind == SE2_FROBENIUS:
        # phi = tr(g_i^T S g_i) with S = psi(g_j)^T psi(g_j), so the
        # gradient in g_i is 2 S g_i; in g_j only the translation column
        # of psi varies and the chain rule collapses to -2 (p_i - p_j).
        S = psi(g[e.j]).matrix.T @ psi(g[e.j]).matrix
        Gi[:] = 2.0 * S @ g[e.i].matrix
        diff = g[e.i].translation - g[e.j].translation
        Gj[:2, 2] = -2.0 * diff
    else:
        diff = g[e.i].translation - g[e.j].translation
        Gi[:3, 3] = 2.0 * diff
        Gj[:3, 3] = -2.0 * diff
    return Gi, Gj


def _trivialize(ambient, g: GroupElement, basis):
    """Project an ambient gradient onto the left-translated algebra basis.

    Component s is <ambient, g e_s>_F, the derivative of phi along the
    body direction e_s.
    """
    return np.array([np.sum(ambient * (g.matrix @ B)) for B in basis])


def constraint_gradients(graph: ConstraintGraph, g: ProductElement):
    """Evaluate Phi with ambient gradients and trivialized rows."""
    _check_config(graph, g)
    n = groups.algebra_dim(graph.group_tag)
    d = groups.matrix_dim(graph.group_tag)
    basis = groups.basis_matrices(graph.group_tag)
    values = constraint_value(graph, g)
    ambient = np.zeros((graph.m, graph.r, d, d))
    rows = np.zeros((graph.m, graph.r * n))
    for idx, e in enumerate(graph.edges):
        Gi, Gj = _ambient_gradient_blocks(graph, g, e)
        ambient[idx, e.i] = Gi
        ambient[idx, e.j] = Gj
        rows[idx, e.i * n:(e.i + 1) * n] = _trivialize(Gi, g[e.i], basis)
        rows[idx, e.j * n:(e.j + 1) * n] = _trivialize(Gj, g[e.j], basis)
    return ConstraintEvaluation(values=values, ambient_gradients=ambient, trivialized_rows=rows)


def _spin(omega):
    return np.array([[0.0, -omega], [omega, 0.0]])


def row_time_derivative(graph: ConstraintGraph, g: ProductElement, xi):
    """Time derivative of ``trivialized_rows`` along the flow dg = g xi.

    ``xi`` is the stacked body velocity, shape (r, n) or (r*n,). Both
    constraint kinds have rows whose only nonzero part is the
    translational block 2 R_i^T (p_i - p_j) for agent i (negated with
    R_j for agent j), so the derivative follows from dR = R W and
    dp = R v.
    """
    _check_config(graph, g)
    n = groups.algebra_dim(graph.group_tag)
    if hasattr(xi, "coords"):
        xi = xi.coords
    xi = np.asarray(xi, dtype=float).reshape(graph.r, n)
    tdim = 2 if graph.group_tag == groups.SE2 else 3
    out = np.zeros((graph.m, graph.r * n))
    for idx, e in enumerate(graph.edges):
        Ri, Rj = g[e.i].rotation, g[e.j].rotation
        diff = g[e.i].translation - g[e.j].translation
        vel = Ri @ xi[e.i, :tdim] - Rj @ xi[e.j, :tdim]
        if graph.group_tag == groups.SE2:
            Wi, Wj = _spin(xi[e.i, 2]), _spin(xi[e.j, 2])
        else:
            Wi, Wj = groups._skew3(xi[e.i, 3:]), groups._skew3(xi[e.j, 3:])
        di = 2.0 * (-Wi @ (Ri.T @ diff) + Ri.T @ vel)
        dj = -2.0 * (-Wj @ (Rj.T @ diff) + Rj.T @ vel)
        out[idx, e.i * n:e.i * n + tdim] = di
        out[idx, e.j * n:e.j * n + tdim] = dj
    return out
