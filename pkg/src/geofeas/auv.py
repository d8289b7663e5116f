"""Three-vehicle underwater scenario: parameters, forces, control extraction.

Vehicles are modeled as neutrally-ish buoyant rigid bodies on SE(3) with
added-mass translational inertia M and rotational inertia J. The
potential combines the buoyancy torque lever arm r_bar (center of
gravity to center of buoyancy) with the net weight along the third
axis, with z measured downward:

    U(R, b) = f_b <r_bar, R^T e3> + (f_b - m g) b_z,

where f_b is the buoyancy force magnitude. The trivialized forces are

    U_force = R^T (m g - f_b) e3,    W_force = -f_b r_bar x (R^T e3),

which is the variational sign (force = minus the trivialized gradient
of U, confirmed by the finite-difference oracle in the tests). The
``as_printed`` convention flips the sign of U_force only; it exists to
reproduce runs from sources using the opposite convention and is not
energy-consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import constraints, groups
from .constraints import ConstraintGraph
from .dynamics import LagrangianModel
from .groups import GroupElement, ProductAlgebraElement, ProductElement
from .integrators import SystemState

_CONVENTIONS = ("variational", "as_printed")

E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class AuvParams:
    """Physical constants of one vehicle.

    ``added_mass`` and ``inertia`` are the diagonals of the translational
    and rotational inertia blocks; ``buoyancy_force`` is the lump f_b in
    newtons (the product of fluid density, displaced volume and gravity,
    never split apart); ``buoyancy_offset`` is r_bar in meters; ``radius``
    is the safety sphere radius entering the constraint distances.
    """

    mass: float = 123.8
    added_mass: tuple = (65.0, 70.0, 75.0)
    inertia: tuple = (5.46, 5.29, 5.72)
    buoyancy_force: float = 1215.8
    buoyancy_offset: tuple = (0.0, 0.0, -0.007)
    radius: float = 1.0
    gravity: float = 9.81

    def __post_init__(self):
        if self.mass <= 0 or self.radius <= 0 or self.gravity <= 0:
            raise ValueError("mass, radius and gravity must be positive")
        for name in ("added_mass", "inertia", "buoyancy_offset"):
            if len(getattr(self, name)) != 3:
                raise ValueError(f"{name} needs exactly three entries")
        if any(a <= -self.mass for a in self.added_mass):
            raise ValueError("added mass makes a translational inertia non-positive")
        if any(j <= 0 for j in self.inertia):
            raise ValueError("rotational inertia diagonal must be positive")

    @property
    def M(self):
        return self.mass * np.eye(3) + np.diag(self.added_mass)

    @property
    def J(self):
        return np.diag(self.inertia)

    def inertia_block(self):
        I6 = np.zeros((6, 6))
        I6[:3, :3] = self.M
        I6[3:, 3:] = self.J
        return I6


class BuoyancyPotential:
    """Potential energy and trivialized forces of one vehicle."""

    def __init__(self, params: AuvParams, sign_convention="variational"):
        if sign_convention not in _CONVENTIONS:
            raise ValueError(f"sign convention must be one of {_CONVENTIONS}")
        self.params = params
        self.sign_convention = sign_convention
        self._rbar = np.asarray(params.buoyancy_offset, dtype=float)
        self._net_weight = params.mass * params.gravity - params.buoyancy_force

    def energy(self, g: GroupElement):
        body_up = g.rotation.T @ E3
        return float(self.params.buoyancy_force * (self._rbar @ body_up)
                     - self._net_weight * g.translation[2])

    def trivialized_force(self, g: GroupElement):
        u, w = potential_forces(self.params, g, self.sign_convention)
        return np.concatenate([u, w])

    def ambient_gradient(self, g: GroupElement):
        out = np.zeros((4, 4))
        out[:3, :3] = self.params.buoyancy_force * np.outer(E3, self._rbar)
        out[2, 3] = -self._net_weight
        return out

    def kernel_coefficients(self):
        sign = 1.0 if self.sign_convention == "variational" else -1.0
        return (sign * self._net_weight, self.params.buoyancy_force,
                self._rbar, -self._net_weight)


def potential_forces(params: AuvParams, g: GroupElement, sign_convention="variational"):
    """Translational and rotational force coordinates (U_force, W_force)."""
    if sign_convention not in _CONVENTIONS:
        raise ValueError(f"sign convention must be one of {_CONVENTIONS}")
    body_up = g.rotation.T @ E3
    net_weight = params.mass * params.gravity - params.buoyancy_force
    u = net_weight * body_up
    if sign_convention == "as_printed":
        u = -u
    w = -params.buoyancy_force * np.cross(np.asarray(params.buoyancy_offset, float), body_up)
    return u, w


def auv_model(params_list, sign_convention="variational"):
    """LagrangianModel with block-diagonal inertias and buoyancy potentials."""
    blocks = [p.inertia_block() for p in params_list]
    pots = [BuoyancyPotential(p, sign_convention) for p in params_list]
    return LagrangianModel(groups.SE3, blocks, pots)


def auv_rhs(params_list, graph, state: SystemState, lam=None, sign_convention="variational"):
    """Body acceleration (nu_dot, omega_dot) per agent, shape (r, 6).

    Written directly from the vehicle equations (gyroscopic terms,
    buoyancy forces, multiplier forces along the constraint gradients)
    rather than through the generic model machinery, so the two can be
    cross-checked against each other.
    """
    coords = np.asarray(state.xi.coords)
    r = len(params_list)
    out = np.zeros((r, 6))
    force_t = np.zeros((r, 3))
    if graph is not None and lam is not None:
        lam = np.asarray(lam, dtype=float)
        for k, e in enumerate(graph.edges):
            db = state.g[e.i].translation - state.g[e.j].translation
            force_t[e.i] += lam[k] * 2.0 * (state.g[e.i].rotation.T @ db)
            force_t[e.j] -= lam[k] * 2.0 * (state.g[e.j].rotation.T @ db)
    for i, p in enumerate(params_list):
        nu, om = coords[i, :3], coords[i, 3:]
        Mnu = p.M @ nu
        Jom = p.J @ om
        u, w = potential_forces(p, state.g[i], sign_convention)
        nudot = np.linalg.solve(p.M, np.cross(Mnu, om) + u + force_t[i])
        omdot = np.linalg.solve(p.J, np.cross(Jom, om) + np.cross(Mnu, nu) + w)
        out[i, :3] = nudot
        out[i, 3:] = omdot
    return out


@dataclass(frozen=True)
class ControlSignal:
    """Per-record force (u, newtons) and torque (u_bar, newton meters) inputs."""

    times: np.ndarray
    u: np.ndarray
    ubar: np.ndarray

    def __len__(self):
        return self.times.shape[0]

    def as_forces(self):
        """Stacked (K, r, 6) force coordinates for replay."""
        return np.concatenate([self.u, self.ubar], axis=2)


def extract_control(params_list, trajectory, sign_convention="variational"):
    """Control inputs that reproduce a recorded trajectory.

    Inverts the actuated equations at every record using the stored
    acceleration: u = M nu_dot - M nu x omega - U_force and
    u_bar = J omega_dot - J omega x omega - M nu x nu - W_force.
    """
    if trajectory.xidot is None or trajectory.xidot.shape[0] != len(trajectory):
        raise ValueError("trajectory carries no stored accelerations")
    K = len(trajectory)
    r = trajectory.r
    if r != len(params_list):
        raise ValueError(f"trajectory has {r} agents, parameters {len(params_list)}")
    u = np.zeros((K, r, 3))
    ubar = np.zeros((K, r, 3))
    for k in range(K):
        state = trajectory.state_at(k)
        coords = np.asarray(state.xi.coords)
        for i, p in enumerate(params_list):
            nu, om = coords[i, :3], coords[i, 3:]
            nudot = trajectory.xidot[k, i, :3]
            omdot = trajectory.xidot[k, i, 3:]
            uf, wf = potential_forces(p, state.g[i], sign_convention)
            Mnu = p.M @ nu
            u[k, i] = p.M @ nudot - np.cross(Mnu, om) - uf
            ubar[k, i] = p.J @ omdot - np.cross(p.J @ om, om) - np.cross(Mnu, nu) - wf
    return ControlSignal(times=trajectory.times.copy(), u=u, ubar=ubar)


def three_vehicle_positions():
    """Initial centers of the three-vehicle run, pairwise 12 m apart.

    The first two are (0,0,0) and (10, 2 sqrt(11), 0); intersecting the
    two distance circles for the third gives the closed form
    (5 + sqrt(33), sqrt(11) - 5 sqrt(3), 0).
    """
    return np.array([
        [0.0, 0.0, 0.0],
        [10.0, 2.0 * math.sqrt(11.0), 0.0],
        [5.0 + math.sqrt(33.0), math.sqrt(11.0) - 5.0 * math.sqrt(3.0), 0.0],
    ])


def three_vehicle_scenario(sign_convention="variational"):
    """Model, constraint graph and initial state of the reference run.

    All three vehicles share the default parameters, start with identity
    attitude, world velocity (0.1, 0.2, 1) m/s and body angular velocity
    (0.3, 0.2, 0.1) rad/s; every pair is constrained to keep its centers
    12 m apart (safety distance 10 m plus two 1 m radii).
    """
    params = [AuvParams() for _ in range(3)]
    model = auv_model(params, sign_convention)
    graph = ConstraintGraph.from_distances(
        3, [(0, 1, 10.0), (0, 2, 10.0), (1, 2, 10.0)],
        constraints.SE3_CENTER_DISTANCE, radii=[p.radius for p in params])
    positions = three_vehicle_positions()
    g = ProductElement([
        GroupElement.from_parts(groups.SE3, np.eye(3), positions[i])
        for i in range(3)
    ])
    coords = np.zeros((3, 6))
    coords[:, :3] = np.array([0.1, 0.2, 1.0])
    coords[:, 3:] = np.array([0.3, 0.2, 0.1])
    xi = ProductAlgebraElement(groups.SE3, coords)
    return params, model, graph, SystemState(g=g, xi=xi, t=0.0)
