"""Time steppers for the coupled group/velocity/multiplier system.

Two explicit first-order methods are provided. ``euler`` updates the
group element entrywise, g <- g + h g xi_hat, then re-projects the
rotation block onto the orthogonal group; ``lie_euler`` updates by
g <- g exp(h xi) and needs no projection. Multipliers are re-solved
from the current state at every step by default, so the constraint
forces are always consistent with the instantaneous geometry; drift in
the constraint values is a measured diagnostic, never corrected
silently. An optional position-projection post-step exists and is off
by default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import constraints, dynamics, groups
from .errors import InfeasibleStateError
from .groups import AlgebraElement, GroupElement, ProductAlgebraElement, ProductElement

_METHODS = ("euler", "lie_euler")
_BACKENDS = ("auto", "numba", "numpy", "object")
_INITIAL_FEASIBLE_TOL = 1e-5


@dataclass
class IntegratorConfig:
    """Step method and schedule for ``run_simulation``.

    ``record_every`` keeps one record per that many steps (plus the
    final state). ``refresh_multipliers`` re-solves the multipliers at
    every step; switching it off freezes the values from the initial
    state, which is only useful for demonstrating why refreshing
    matters. ``backend`` picks the execution path: "object" runs the
    generic group arithmetic, "numpy"/"numba" run the flat-array
    kernels, "auto" defers to the GEOFEAS_BACKEND environment variable
    and falls back to numba when it imports.
    """

    h: float
    steps: int
    method: str = "lie_euler"
    refresh_multipliers: bool = True
    record_every: int = 1
    enforce_constraints: bool = True
    project_positions: bool = False
    backend: str = "auto"

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if not self.h > 0:
            raise ValueError(f"step size must be positive, got {self.h}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        self.steps = int(self.steps)
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")
        self.record_every = int(self.record_every)
        if self.backend not in _BACKENDS:
            raise ValueError(f"backend must be one of {_BACKENDS}, got {self.backend!r}")


@dataclass(frozen=True)
class SystemState:
    """Configuration, body velocity and time of the whole formation."""

    g: ProductElement
    xi: ProductAlgebraElement
    t: float = 0.0

    def __post_init__(self):
        if self.g.group_tag != self.xi.group_tag:
            raise ValueError("state mixes group tags")
        if len(self.g) != np.asarray(self.xi.coords).shape[0]:
            raise ValueError("state mixes agent counts")


@dataclass
class Trajectory:
    """Recorded simulation output plus whole-run drift maxima.

    Arrays are indexed by record; ``matrices`` holds the group elements,
    ``xi``/``xidot`` the body velocities and their derivatives, ``lam``
    the multipliers used at each recorded state, ``phi``/``dphi`` the
    constraint values and rates, ``momentum`` the per-agent spatial
    momentum coordinates and ``ortho`` the Frobenius distance of each
    rotation block from orthogonality. The ``max_*`` fields are maxima
    over every step taken, not just over recorded ones.
    """

    group_tag: str
    times: np.ndarray
    matrices: np.ndarray
    xi: np.ndarray
    xidot: np.ndarray
    lam: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    energy: np.ndarray
    momentum: np.ndarray
    ortho: np.ndarray
    method: str
    h: float
    steps: int
    record_every: int
    max_abs_phi: float
    max_abs_rate: float
    max_ortho: float
    max_distance_drift: float
    backend_used: str = "object"

    def __len__(self):
        return self.times.shape[0]

    @property
    def r(self):
        return self.matrices.shape[1]

    def state_at(self, k):
        tag = self.group_tag
        g = ProductElement([GroupElement(tag, self.matrices[k, i]) for i in range(self.r)])
        xi = ProductAlgebraElement(tag, self.xi[k])
        return SystemState(g=g, xi=xi, t=float(self.times[k]))

    def final_state(self):
        return self.state_at(len(self) - 1)


def _advance_group(g: ProductElement, xi_coords, h, method):
    tag = g.group_tag
    out = []
    for i, gi in enumerate(g):
        if method == "euler":
            raw = gi.matrix + h * (gi.matrix @ groups.hat_matrix(xi_coords[i], tag))
            if tag == groups.SO3:
                out.append(GroupElement.from_parts(tag, groups._project_rotation(raw)))
            else:
                k = raw.shape[0] - 1
                out.append(GroupElement.from_parts(
                    tag, groups._project_rotation(raw[:k, :k]), raw[:k, k]))
        else:
            step = groups.exp_map(AlgebraElement(tag, h * xi_coords[i]))
            out.append(groups.compose(gi, step))
    return ProductElement(out)


def _solve_step_lambda(model, graph, g, xi_elem, step):
    sol = dynamics.solve_multipliers(model, graph, g, xi_elem,
                                     check_feasible=False, step_index=step)
    return sol.lam


def _single_step(model, graph, state: SystemState, h, method):
    xi_coords = np.asarray(state.xi.coords)
    lam = None
    if graph is not None and graph.m > 0:
        lam = _solve_step_lambda(model, graph, state.g, state.xi, None)
    xidot = dynamics.constrained_el_rhs(model, graph, state.g, state.xi, lam)
    g_new = _advance_group(state.g, xi_coords, h, method)
    xi_new = ProductAlgebraElement(state.g.group_tag, xi_coords + h * xidot)
    return SystemState(g=g_new, xi=xi_new, t=state.t + h)


def euler_step(model, graph, state, h):
    """One entrywise-Euler step with rotation re-projection."""
    return _single_step(model, graph, state, h, "euler")


def lie_euler_step(model, graph, state, h):
    """One exponential-update step; iterates stay on the group exactly."""
    return _single_step(model, graph, state, h, "lie_euler")


def _spatial_momentum(model, g, xi_coords):
    tag = model.group_tag
    out = np.zeros_like(xi_coords)
    for i, gi in enumerate(g):
        mu = model.inertias[i] @ xi_coords[i]
        mu_el = groups.CoAlgebraElement(tag, mu)
        out[i] = groups.coAd(groups.inverse(gi), mu_el).coords
    return out


def _ortho_errors(g):
    out = np.zeros(len(g))
    for i, gi in enumerate(g):
        R = gi.rotation
        out[i] = np.linalg.norm(R.T @ R - np.eye(R.shape[0]))
    return out


def _record_count(steps, every):
    count = steps // every + 1
    if steps % every != 0:
        count += 1
    return count


def _check_initial_feasibility(graph, g, xi_flat):
    values = constraints.constraint_value(graph, g)
    worst = float(np.max(np.abs(values))) if values.size else 0.0
    if worst > _INITIAL_FEASIBLE_TOL:
        k = int(np.argmax(np.abs(values)))
        edge = graph.edges[k]
        raise InfeasibleStateError(
            f"initial state violates constraint k={edge.k} between agents "
            f"{edge.i + 1} and {edge.j + 1} (|phi| = {worst:.3e})",
            max_violation=worst,
        )
    rows = constraints.constraint_gradients(graph, g).trivialized_rows
    rate = rows @ xi_flat
    worst_rate = float(np.max(np.abs(rate))) if rate.size else 0.0
    if worst_rate > _INITIAL_FEASIBLE_TOL:
        k = int(np.argmax(np.abs(rate)))
        edge = graph.edges[k]
        raise InfeasibleStateError(
            f"initial velocity violates the rate of constraint k={edge.k} between agents "
            f"{edge.i + 1} and {edge.j + 1} (|dphi/dt| = {worst_rate:.3e})",
            max_violation=worst_rate,
        )


def _project_translations(graph, g, tol=1e-12, max_iter=3):
    """Newton correction of the translations back onto the constraint set."""
    tdim = 2 if graph.group_tag == groups.SE2 else 3
    for _ in range(max_iter):
        values = constraints.constraint_value(graph, g)
        if not values.size or np.max(np.abs(values)) <= tol:
            break
        Jac = np.zeros((graph.m, graph.r * tdim))
        for idx, e in enumerate(graph.edges):
            diff = g[e.i].translation - g[e.j].translation
            Jac[idx, e.i * tdim:(e.i + 1) * tdim] = 2.0 * diff
            Jac[idx, e.j * tdim:(e.j + 1) * tdim] = -2.0 * diff
        delta, *_ = np.linalg.lstsq(Jac, -values, rcond=None)
        delta = delta.reshape(graph.r, tdim)
        g = ProductElement([
            GroupElement.from_parts(g.group_tag, gi.rotation, gi.translation + delta[i])
            for i, gi in enumerate(g)
        ])
    return g


def run_simulation(model, graph, state: SystemState, config: IntegratorConfig,
                   external_forces=None):
    """Integrate the constrained dynamics for ``config.steps`` steps.

    With constraints enforced, the initial state must satisfy the
    position and rate conditions to 1e-5 (InfeasibleStateError names the
    violated constraint); an irregular constraint system surfaces as a
    SingularConstraintError from the step-0 multiplier solve.
    ``external_forces`` has shape (steps+1, r, n) and adds force
    coordinates to every agent at each step, which is how extracted
    control laws are replayed through the unconstrained system.
    Identical inputs produce bit-identical outputs.
    """
    tag = model.group_tag
    n = groups.algebra_dim(tag)
    r = model.r
    if len(state.g) != r:
        raise ValueError(f"state has {len(state.g)} agents, model has {r}")
    if graph is not None and graph.group_tag != tag:
        raise ValueError("graph group tag does not match the model")
    if external_forces is not None:
        external_forces = np.asarray(external_forces, dtype=float)
        want = (config.steps + 1, r, n)
        if external_forces.shape != want:
            raise ValueError(f"external_forces must have shape {want}")

    xi_coords = np.array(state.xi.coords, dtype=float)
    if graph is not None and config.enforce_constraints:
        _check_initial_feasibility(graph, state.g, xi_coords.reshape(-1))

    from . import kernels
    backend = kernels.resolve_backend(config.backend)
    if backend != "object":
        arrays = kernels.kernel_arrays(model, graph, state)
        if arrays is not None:
            return kernels.run_kernel(model, graph, state, config, arrays,
                                      external_forces, backend)
        if config.backend in ("numba", "numpy"):
            raise ValueError(
                "requested kernel backend, but the model or constraint kind "
                "has no flat-array kernel; use backend='object'")
    return _run_object(model, graph, state, config, external_forces)


def _run_object(model, graph, state, config, external_forces):
    tag = model.group_tag
    n = groups.algebra_dim(tag)
    r = model.r
    d = groups.matrix_dim(tag)
    m = graph.m if graph is not None else 0
    steps, q, h = config.steps, config.record_every, config.h
    K = _record_count(steps, q)

    times = np.zeros(K)
    mats = np.zeros((K, r, d, d))
    xis = np.zeros((K, r, n))
    xidots = np.zeros((K, r, n))
    lams = np.zeros((K, m))
    phis = np.zeros((K, m))
    dphis = np.zeros((K, m))
    energies = np.zeros(K)
    momenta = np.zeros((K, r, n))
    orthos = np.zeros((K, r))

    targets = np.array([graph.target_distance(e) for e in graph.edges]) if graph is not None else np.zeros(0)
    g = state.g
    xi = np.array(state.xi.coords, dtype=float)
    lam_frozen = None
    rec = 0
    max_phi = 0.0
    max_rate = 0.0
    max_ortho = 0.0
    max_drift = 0.0

    for step in range(steps + 1):
        xi_elem = ProductAlgebraElement(tag, xi)
        if m > 0:
            ev = constraints.constraint_gradients(graph, g)
            phi = ev.values
            dphi = ev.trivialized_rows @ xi.reshape(-1)
        else:
            phi = np.zeros(0)
            dphi = np.zeros(0)
        if m > 0 and config.enforce_constraints:
            if config.refresh_multipliers or lam_frozen is None:
                lam = _solve_step_lambda(model, graph, g, xi_elem, step)
                if not config.refresh_multipliers:
                    lam_frozen = lam
            else:
                lam = lam_frozen
        else:
            lam = np.zeros(m)
        xidot = dynamics.constrained_el_rhs(
            model, graph if m > 0 and config.enforce_constraints else None,
            g, xi_elem, lam if m > 0 and config.enforce_constraints else None)
        if external_forces is not None:
            for i in range(r):
                xidot[i] = xidot[i] + model.inertia_inverses[i] @ external_forces[step, i]
        ortho = _ortho_errors(g)

        if phi.size:
            max_phi = max(max_phi, float(np.max(np.abs(phi))))
            max_rate = max(max_rate, float(np.max(np.abs(dphi))))
            dist = np.sqrt(np.maximum(phi + targets ** 2, 0.0))
            max_drift = max(max_drift, float(np.max(np.abs(dist - targets))))
        max_ortho = max(max_ortho, float(np.max(ortho)))

        if step % q == 0 or step == steps:
            times[rec] = state.t + step * h
            for i in range(r):
                mats[rec, i] = g[i].matrix
            xis[rec] = xi
            xidots[rec] = xidot
            lams[rec] = lam
            phis[rec] = phi
            dphis[rec] = dphi
            energies[rec] = model.energy(g, xi_elem)
            momenta[rec] = _spatial_momentum(model, g, xi)
            orthos[rec] = ortho
            rec += 1
        if step == steps:
            break
        g = _advance_group(g, xi, h, config.method)
        xi = xi + h * xidot
        if config.project_positions and graph is not None:
            g = _project_translations(graph, g)

    return Trajectory(
        group_tag=tag, times=times, matrices=mats, xi=xis, xidot=xidots,
        lam=lams, phi=phis, dphi=dphis, energy=energies, momentum=momenta,
        ortho=orthos, method=config.method, h=h, steps=steps,
        record_every=q, max_abs_phi=max_phi, max_abs_rate=max_rate,
        max_ortho=max_ortho, max_distance_drift=max_drift,
        backend_used="object",
    )
