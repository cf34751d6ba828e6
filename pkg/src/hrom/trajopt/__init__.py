"""
Direct-collocation trajectory optimization.

Transcription, interpolants, finite differences and the
augmented-Lagrangian solver used by the ``optimize`` command.
"""

from .collocation import (
    AttitudeEffortCost,
    CollocationCost,
    CollocationProgram,
    CostWeights,
    DecisionVector,
    EffortIntegralCost,
    ProblemSpec,
    cost,
    defect_jacobian,
    defects,
    nlp_solve,
    seed_from_simulation,
)
from .interpolation import control_interp, hermite_coefficients, hermite_midpoint, state_interp
from .problems import (
    HromDynamics,
    OptConfig,
    double_integrator,
    double_integrator_problem,
    fan_inequalities,
    hrom_problem,
    penalty_map,
    pitch_limit,
    wrench_bounds,
)
from .solver import AugmentedLagrangianSolver, NonlinearProgram, SolverOptions, SolverReport, SolverResult

__all__ = [
    # Transcription
    "DecisionVector",
    "ProblemSpec",
    "CostWeights",
    "CollocationProgram",
    "CollocationCost",
    "AttitudeEffortCost",
    "EffortIntegralCost",
    "defects",
    "defect_jacobian",
    "cost",
    "nlp_solve",
    "seed_from_simulation",
    # Interpolants
    "control_interp",
    "state_interp",
    "hermite_coefficients",
    "hermite_midpoint",
    # Solver
    "NonlinearProgram",
    "AugmentedLagrangianSolver",
    "SolverOptions",
    "SolverReport",
    "SolverResult",
    # Problems
    "OptConfig",
    "HromDynamics",
    "hrom_problem",
    "double_integrator",
    "double_integrator_problem",
    "penalty_map",
    "wrench_bounds",
    "fan_inequalities",
    "pitch_limit",
]
