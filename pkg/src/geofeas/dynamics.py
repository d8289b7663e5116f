"""Constrained Lagrangian dynamics on product groups.

Each agent carries a left-trivialized kinetic energy 0.5 xi^T I xi with a
symmetric positive definite inertia I, plus an optional configuration
potential. The constrained equations in body coordinates read

    mu_dot = ad_xi^* mu + f_pot + sum_k lambda_k a_k,    mu = I xi,

where a_k are the trivialized constraint rows. Differentiating the
velocity-level conditions A(g) xi = 0 once more in time gives a linear
system for the multipliers at each state; its matrix A I^{-1} A^T is the
Gram matrix of the rows in the kinetic metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constraints, groups
from .constraints import ConstraintGraph
from .errors import InfeasibleStateError, SingularConstraintError
from .groups import ProductAlgebraElement, ProductElement

_SYM_TOL = 1e-12
_CONDITION_LIMIT = 1e12
_REGULARITY_REL_TOL = 1e-8
_FEASIBLE_TOL = 1e-6


class ZeroPotential:
    """Potential that contributes nothing; keeps agent lists uniform."""

    def energy(self, g):
        return 0.0

    def trivialized_force(self, g):
        n = groups.algebra_dim(g.group_tag)
        return np.zeros(n)

    def ambient_gradient(self, g):
        return np.zeros_like(g.matrix)

    def kernel_coefficients(self):
        return 0.0, 0.0, np.zeros(3), 0.0


class LagrangianModel:
    """Per-agent inertias and potentials for a formation on one group.

    ``inertias`` is a sequence of (n, n) SPD matrices in algebra
    coordinates; ``potentials`` a matching sequence of objects with
    ``energy``, ``trivialized_force`` and ``ambient_gradient`` methods
    (None entries mean no potential).
    """

    def __init__(self, group_tag, inertias, potentials=None):
        if group_tag not in (groups.SO3, groups.SE2, groups.SE3):
            raise ValueError(f"unknown group tag {group_tag!r}")
        self.group_tag = group_tag
        n = groups.algebra_dim(group_tag)
        blocks = []
        for idx, I in enumerate(inertias):
            I = np.asarray(I, dtype=float)
            if I.shape != (n, n):
                raise ValueError(f"inertia {idx} must be {n}x{n}, got {I.shape}")
            if np.max(np.abs(I - I.T)) > _SYM_TOL:
                raise ValueError(f"inertia {idx} is not symmetric")
            try:
                np.linalg.cholesky(I)
            except np.linalg.LinAlgError:
                raise ValueError(f"inertia {idx} is not positive definite") from None
            blocks.append(I)
        self.inertias = [b.copy() for b in blocks]
        self.inertia_inverses = [np.linalg.inv(b) for b in blocks]
        if potentials is None:
            potentials = [None] * len(blocks)
        if len(potentials) != len(blocks):
            raise ValueError("need one potential entry per agent")
        self.potentials = [p if p is not None else ZeroPotential() for p in potentials]

    @property
    def r(self):
        return len(self.inertias)

    def momentum(self, xi: ProductAlgebraElement):
        """Body momentum coordinates I_i xi_i per agent, shape (r, n)."""
        coords = np.asarray(xi.coords)
        return np.vstack([I @ coords[i] for i, I in enumerate(self.inertias)])

    def kinetic_energy(self, xi: ProductAlgebraElement):
        coords = np.asarray(xi.coords)
        return 0.5 * float(sum(coords[i] @ I @ coords[i] for i, I in enumerate(self.inertias)))

    def potential_energy(self, g: ProductElement):
        return float(sum(p.energy(gi) for p, gi in zip(self.potentials, g)))

    def energy(self, g: ProductElement, xi: ProductAlgebraElement):
        return self.kinetic_energy(xi) + self.potential_energy(g)

    def free_forces(self, g: ProductElement, xi: ProductAlgebraElement):
        """Gyroscopic plus potential force coordinates per agent, shape (r, n)."""
        coords = np.asarray(xi.coords)
        mu = self.momentum(xi)
        out = np.zeros_like(mu)
        for i in range(self.r):
            xi_i = groups.AlgebraElement(self.group_tag, coords[i])
            out[i] = groups.ad_matrix(xi_i).T @ mu[i]
            out[i] += self.potentials[i].trivialized_force(g[i])
        return out


def lagrangian(model: LagrangianModel, g: ProductElement, xi: ProductAlgebraElement):
    """Total kinetic minus potential energy of the formation."""
    return model.kinetic_energy(xi) - model.potential_energy(g)


def augmented_lagrangian(model, graph, g, xi, lam):
    """Lagrangian minus the multiplier pairing lambda . Phi(g)."""
    lam = np.asarray(lam, dtype=float)
    values = constraints.constraint_value(graph, g)
    if lam.shape != values.shape:
        raise ValueError(f"lambda must have shape {values.shape}, got {lam.shape}")
    return lagrangian(model, g, xi) - float(lam @ values)


def constrained_el_rhs(model, graph, g, xi, lam=None):
    """Velocity derivative xi_dot per agent, shape (r, n).

    With ``graph`` and ``lam`` present the multiplier force
    sum_k lambda_k a_k is added blockwise before applying the inverse
    inertias; otherwise the free dynamics are returned.
    """
    n = groups.algebra_dim(model.group_tag)
    mu_dot = model.free_forces(g, xi)
    if graph is not None and lam is not None:
        lam = np.asarray(lam, dtype=float)
        rows = constraints.constraint_gradients(graph, g).trivialized_rows
        force = (rows.T @ lam).reshape(model.r, n)
        mu_dot = mu_dot + force
    return np.vstack([
        model.inertia_inverses[i] @ mu_dot[i] for i in range(model.r)
    ])


@dataclass(frozen=True)
class MultiplierSolve:
    """Multipliers with the linear system that produced them."""

    lam: np.ndarray
    gram: np.ndarray
    rhs: np.ndarray
    condition_number: float


def _apply_block_inverse(model, stacked):
    """I^{-1} v for stacked coordinates, shape (r*n,)."""
    n = groups.algebra_dim(model.group_tag)
    out = np.empty_like(stacked)
    for i, Iinv in enumerate(model.inertia_inverses):
        out[i * n:(i + 1) * n] = Iinv @ stacked[i * n:(i + 1) * n]
    return out


def solve_multipliers(model, graph, g, xi, check_feasible=True, step_index=None):
    """Multipliers that keep the acceleration tangent to the constraints.

    Solves (A I^{-1} A^T) lambda = -Adot xi - A I^{-1} f_free. With
    ``check_feasible`` the state must satisfy the position and velocity
    conditions to 1e-6. A Gram matrix with condition number above 1e12
    raises SingularConstraintError.
    """
    n = groups.algebra_dim(model.group_tag)
    rows = constraints.constraint_gradients(graph, g).trivialized_rows
    xi_flat = np.asarray(xi.coords).reshape(-1)
    if check_feasible:
        values = constraints.constraint_value(graph, g)
        worst = float(np.max(np.abs(values))) if values.size else 0.0
        if worst > _FEASIBLE_TOL:
            raise InfeasibleStateError(
                f"state violates constraints (max |phi| = {worst:.3e})",
                max_violation=worst,
            )
        rate = rows @ xi_flat
        worst_rate = float(np.max(np.abs(rate))) if rate.size else 0.0
        if worst_rate > _FEASIBLE_TOL:
            raise InfeasibleStateError(
                f"velocity violates constraint rates (max |dphi/dt| = {worst_rate:.3e})",
                max_violation=worst_rate,
            )
    free = model.free_forces(g, xi).reshape(-1)
    n_rows = rows.shape[0]
    AI = np.vstack([_apply_block_inverse(model, rows[k]) for k in range(n_rows)])
    gram = rows @ AI.T
    gram = 0.5 * (gram + gram.T)
    adot_xi = constraints.row_time_derivative(graph, g, xi) @ xi_flat
    rhs = -adot_xi - AI @ free
    svals = np.linalg.svd(gram, compute_uv=False)
    cond = float("inf") if svals[-1] == 0.0 else float(svals[0] / svals[-1])
    if not np.isfinite(cond) or cond > _CONDITION_LIMIT:
        raise SingularConstraintError(
            f"multiplier system is numerically singular (condition {cond:.3e})",
            condition_number=cond,
            step_index=step_index,
        )
    lam = np.linalg.solve(gram, rhs)
    return MultiplierSolve(lam=lam, gram=gram, rhs=rhs, condition_number=cond)


@dataclass(frozen=True)
class RegularityReport:
    """Singular-value summary of the stacked inertia/constraint block matrix."""

    matrix: np.ndarray
    sigma_min: float
    sigma_max: float
    regular: bool

    @property
    def ratio(self):
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else 0.0


def regularity_check(model, graph, g):
    """Invertibility test of [[blockdiag(I), A^T], [A, 0]] at the state g.

    Regular means the smallest singular value exceeds 1e-8 times the
    largest, which is exactly the solvability condition for the combined
    acceleration/multiplier system.
    """
    n = groups.algebra_dim(model.group_tag)
    dim = model.r * n
    rows = constraints.constraint_gradients(graph, g).trivialized_rows
    m = rows.shape[0]
    block = np.zeros((dim + m, dim + m))
    for i, I in enumerate(model.inertias):
        block[i * n:(i + 1) * n, i * n:(i + 1) * n] = I
    block[:dim, dim:] = rows.T
    block[dim:, :dim] = rows
    svals = np.linalg.svd(block, compute_uv=False)
    sigma_max = float(svals[0])
    sigma_min = float(svals[-1])
    regular = sigma_min > _REGULARITY_REL_TOL * sigma_max
    return RegularityReport(matrix=block, sigma_min=sigma_min, sigma_max=sigma_max, regular=regular)
