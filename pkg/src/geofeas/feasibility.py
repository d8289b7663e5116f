"""Admissible-velocity subspaces for formations under holonomic constraints.

A stacked body velocity xi keeps all constraint values stationary
exactly when the trivialized constraint rows annihilate it. Transporting
each agent's row block by the co-Adjoint action of the inverse group
element rewrites that condition on world-frame velocity representatives;
the kernel of the transported coefficient matrix is the admissible set
computed here. Its basis elements generate single flows that preserve
the formation, so they double as the inputs of a reduced control system
on the product group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constraints, groups
from .constraints import ConstraintGraph
from .errors import InfeasibleStateError
from .groups import GroupElement, ProductAlgebraElement, ProductElement

_RANK_REL_TOL = 1e-10
_FEASIBLE_TOL = 1e-6


def coadjoint_transport(g: ProductElement, rows):
    """Transport trivialized rows blockwise by coAd of each inverse factor.

    ``rows`` has shape (m, r*n); block i of every row is replaced by its
    image under the co-Adjoint action at ``inverse(g[i])``.
    """
    rows = np.asarray(rows, dtype=float)
    n = groups.algebra_dim(g.group_tag)
    out = rows.copy()
    for i, gi in enumerate(g):
        T = groups.Ad_matrix(groups.inverse(gi))
        # row blocks are covectors: mu' = T^T mu, applied to all rows at once
        out[:, i * n:(i + 1) * n] = rows[:, i * n:(i + 1) * n] @ T
    return out


@dataclass(frozen=True)
class FeasibilitySystem:
    """Coefficient matrix of the admissible-velocity conditions at one base point.

    ``nullspace_basis`` is orthonormal in stacked coordinates, ordered by
    descending weight on translational coordinates, with signs fixed so
    the largest-magnitude entry of each basis vector is positive.
    """

    base_point: ProductElement
    coefficient_matrix: np.ndarray
    rank: int
    nullspace_basis: tuple
    singular_values: np.ndarray

    @property
    def nullspace_dim(self):
        return len(self.nullspace_basis)

    def basis_array(self):
        """Basis as an (s, r*n) array of stacked coordinates."""
        if not self.nullspace_basis:
            n = groups.algebra_dim(self.base_point.group_tag)
            return np.zeros((0, len(self.base_point) * n))
        return np.vstack([K.stacked() for K in self.nullspace_basis])


def _translation_mask(group_tag, r):
    n = groups.algebra_dim(group_tag)
    mask = np.zeros(r * n, dtype=bool)
    tdim = {groups.SE2: 2, groups.SE3: 3, groups.SO3: 0}[group_tag]
    for i in range(r):
        mask[i * n:i * n + tdim] = True
    return mask


def _ordered_nullspace(N, group_tag, r):
    """Deterministic ordering and sign convention for an orthonormal basis."""
    if N.shape[0] == 0:
        return N
    mask = _translation_mask(group_tag, r)
    weights = np.sum(N[:, mask] ** 2, axis=1)
    order = np.argsort(-weights, kind="stable")
    N = N[order]
    for row in N:
        lead = np.argmax(np.abs(row))
        if row[lead] < 0:
            row *= -1.0
    return N


def admissible_velocity_space(graph: ConstraintGraph, g: ProductElement):
    """Rank and orthonormal nullspace of the transported constraint rows.

    The base point must satisfy the constraints to within 1e-6;
    otherwise an InfeasibleStateError carrying the worst violation is
    raised. Rank uses singular values above 1e-10 times the largest.
    """
    values = constraints.constraint_value(graph, g)
    worst = float(np.max(np.abs(values))) if values.size else 0.0
    if worst > _FEASIBLE_TOL:
        raise InfeasibleStateError(
            f"base point violates constraints (max |phi| = {worst:.3e})",
            max_violation=worst,
        )
    n = groups.algebra_dim(g.group_tag)
    dim = len(g) * n
    rows = constraints.constraint_gradients(graph, g).trivialized_rows
    A = coadjoint_transport(g, rows)
    if graph.m == 0:
        basis = np.eye(dim)
        svals = np.zeros(0)
        rank = 0
    else:
        _, svals, Vt = np.linalg.svd(A)
        rank = int(np.sum(svals > _RANK_REL_TOL * svals[0])) if svals.size else 0
        basis = Vt[rank:]
    basis = _ordered_nullspace(basis.copy(), g.group_tag, len(g))
    elems = tuple(ProductAlgebraElement(g.group_tag, row.reshape(len(g), n)) for row in basis)
    return FeasibilitySystem(
        base_point=g,
        coefficient_matrix=A,
        rank=rank,
        nullspace_basis=elems,
        singular_values=svals,
    )


def se2_transported_rows_closed_form(graph: ConstraintGraph, g: ProductElement):
    """Hand-assembled transported rows for the planar distance constraint.

    Independent of the generic transport pipeline: the trivialized row
    entries come from the matrix G = g_i^T psi(g_j)^T psi(g_j) g_i (its
    (3,1) and (3,2) entries, doubled, with zero rotational component)
    and the transport uses the closed-form co-Adjoint action
    (mu, beta) -> (mu + (R beta) . (S p), R beta) at the inverse element,
    where S is the quarter-turn spin matrix.
    """
    if graph.kind != constraints.SE2_FROBENIUS:
        raise ValueError("closed-form assembly applies to the SE(2) constraint kind")
    constraints._check_config(graph, g)
    S = np.array([[0.0, -1.0], [1.0, 0.0]])
    out = np.zeros((graph.m, 3 * graph.r))

    def transported(beta, gi: GroupElement):
        world = gi.rotation @ beta
        return world, float(world @ (S @ gi.translation))

    for idx, e in enumerate(graph.edges):
        gi, gj = g[e.i], g[e.j]
        G = gi.matrix.T @ psi_gram(gj) @ gi.matrix
        beta_i = 2.0 * np.array([G[2, 0], G[2, 1]])
        beta_j = -2.0 * gj.rotation.T @ (gi.translation - gj.translation)
        for agent, beta in ((e.i, beta_i), (e.j, beta_j)):
            world, rot = transported(beta, g[agent])
            out[idx, 3 * agent:3 * agent + 2] = world
            out[idx, 3 * agent + 2] = rot
    return out


def psi_gram(gj: GroupElement):
    """psi(g_j)^T psi(g_j), the Gram matrix entering the planar constraint."""
    P = constraints.psi(gj).matrix
    return P.T @ P


def abstraction_step(basis, omega, g: ProductElement, h_step):
    """Advance the formation by the admissible direction sum(omega_k K_k).

    The basis vectors are world-frame velocity representatives (they
    solve the transported annihilation conditions), so each agent is
    moved by left multiplication with the exponential of its block.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (len(basis),):
        raise ValueError(f"omega must have length {len(basis)}, got {omega.shape}")
    if not basis:
        return g
    tag = g.group_tag
    n = groups.algebra_dim(tag)
    K = np.zeros((len(g), n))
    for w, elem in zip(omega, basis):
        K += w * np.asarray(elem.coords)
    new = []
    for i, gi in enumerate(g):
        flow = groups.exp_map(groups.AlgebraElement(tag, h_step * K[i]))
        new.append(groups.compose(flow, gi))
    return ProductElement(new)


def abstraction_rollout(graph: ConstraintGraph, g: ProductElement, omegas, h_step, refresh=True):
    """Run ``abstraction_step`` over a sequence of inputs.

    ``omegas`` has shape (N, s). With ``refresh`` the basis is recomputed
    at every step (the mode that keeps constraint drift small); without
    it the initial basis is reused. Returns the final configuration and
    the per-step constraint values, shape (N+1, m).
    """
    omegas = np.asarray(omegas, dtype=float)
    sys0 = admissible_velocity_space(graph, g)
    s = sys0.nullspace_dim
    if omegas.ndim != 2 or omegas.shape[1] != s:
        raise ValueError(f"omegas must have shape (N, {s}), got {omegas.shape}")
    drift = np.zeros((omegas.shape[0] + 1, graph.m))
    drift[0] = constraints.constraint_value(graph, g)
    basis = sys0.nullspace_basis
    for step, w in enumerate(omegas):
        if refresh and step > 0:
            rows = constraints.constraint_gradients(graph, g).trivialized_rows
            A = coadjoint_transport(g, rows)
            _, svals, Vt = np.linalg.svd(A)
            rank = int(np.sum(svals > _RANK_REL_TOL * svals[0])) if svals.size else 0
            N = _ordered_nullspace(Vt[rank:].copy(), g.group_tag, len(g))
            if N.shape[0] != s:
                raise InfeasibleStateError(
                    f"admissible dimension changed from {s} to {N.shape[0]} at step {step}"
                )
            n = groups.algebra_dim(g.group_tag)
            basis = tuple(ProductAlgebraElement(g.group_tag, row.reshape(len(g), n)) for row in N)
        g = abstraction_step(basis, w, g, h_step)
        drift[step + 1] = constraints.constraint_value(graph, g)
    return g, drift
