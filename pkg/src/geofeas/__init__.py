"""Motion feasibility and constrained dynamics for formations on matrix Lie groups."""

from .auv import AuvParams, ControlSignal, auv_model, extract_control, three_vehicle_scenario
from .config import ConfigError, Scenario, load_scenario
from .constraints import (
    SE2_FROBENIUS,
    SE3_CENTER_DISTANCE,
    ConstraintGraph,
    Edge,
    constraint_gradients,
    constraint_value,
)
from .dynamics import (
    LagrangianModel,
    MultiplierSolve,
    RegularityReport,
    augmented_lagrangian,
    constrained_el_rhs,
    regularity_check,
    solve_multipliers,
)
from .errors import InfeasibleStateError, SingularConstraintError
from .feasibility import (
    FeasibilitySystem,
    abstraction_rollout,
    abstraction_step,
    admissible_velocity_space,
    coadjoint_transport,
)
from .integrators import (
    IntegratorConfig,
    SystemState,
    Trajectory,
    run_simulation,
)
from .kernels import numba_available, resolve_backend
from .groups import (
    SE2,
    SE3,
    SO3,
    Ad,
    Ad_matrix,
    AlgebraElement,
    CoAlgebraElement,
    GroupElement,
    ProductAlgebraElement,
    ProductElement,
    ad,
    ad_matrix,
    coAd,
    coad,
    compose,
    exp_map,
    hat,
    identity,
    inverse,
    pairing,
    vee,
)

__version__ = "0.1.0"

__all__ = [
    "SE2",
    "SE3",
    "SO3",
    "SE2_FROBENIUS",
    "SE3_CENTER_DISTANCE",
    "Ad",
    "Ad_matrix",
    "AlgebraElement",
    "AuvParams",
    "CoAlgebraElement",
    "ConfigError",
    "ConstraintGraph",
    "ControlSignal",
    "Edge",
    "FeasibilitySystem",
    "GroupElement",
    "InfeasibleStateError",
    "IntegratorConfig",
    "LagrangianModel",
    "MultiplierSolve",
    "ProductAlgebraElement",
    "ProductElement",
    "RegularityReport",
    "Scenario",
    "SingularConstraintError",
    "SystemState",
    "Trajectory",
    "abstraction_rollout",
    "abstraction_step",
    "ad",
    "ad_matrix",
    "admissible_velocity_space",
    "augmented_lagrangian",
    "auv_model",
    "coAd",
    "coad",
    "coadjoint_transport",
    "compose",
    "constrained_el_rhs",
    "constraint_gradients",
    "constraint_value",
    "exp_map",
    "extract_control",
    "hat",
    "identity",
    "inverse",
    "load_scenario",
    "numba_available",
    "pairing",
    "regularity_check",
    "resolve_backend",
    "run_simulation",
    "solve_multipliers",
    "three_vehicle_scenario",
    "vee",
]
