"""wrapcam: design toolkit for spring-loaded, wire-wrapped cam balancing mechanisms."""

from .balancing import (RRArmParams, TabulatedTorque, friction_mu_from_slip,
                        polynomial_torque, rr_gravity_torques)
from .errors import (ConfigError, DegenerateTangentError, DomainError,
                     InfeasibleGeometryError, InvalidGeometryError,
                     MaxIterationsError, NoFeasiblePointError,
                     NonConvergenceError, WrapcamError)
from .geometry import (CamProfile, PlanePoint, arc_length, body_curve,
                       cam_point, convexity_margin, eval_rho,
                       export_profile_csv, tangent_unit)
from .optimizer import (CamGeometry, DesignReport, DesignVector, GridEvaluator,
                        MechanismConfig, evaluate_metrics, objective_1dof,
                        objective_2dof, optimize_design)
from .sensitivity import (SensitivityGrid, dtau_dk_finite, dtau_dk_infinite,
                          sensitivity_objective)
from .springs import (CamContactState, ExtensionState, SpringDesign,
                      SpringSpec, SpringWireGeometry,
                      coupling_spring_extension_2dof, design_spring,
                      normal_spring_extension, wrap_spring_extension)
from .tangency import (IdlerSpec, TangencySolution, solve_tangency,
                       sweep_tangency, tangency_residual)
from .torque import (FrictionModel, WireState, cam_torque_finite,
                     cam_torque_infinite, cam_torques_2dof,
                     distributed_wire_force, solve_extension_state,
                     wire_tension)

__version__ = "0.1.0"

__all__ = [
    "CamContactState", "CamGeometry", "CamProfile", "ConfigError",
    "DegenerateTangentError", "DesignReport", "DesignVector", "DomainError",
    "ExtensionState", "FrictionModel", "GridEvaluator", "IdlerSpec",
    "InfeasibleGeometryError", "InvalidGeometryError", "MaxIterationsError",
    "MechanismConfig", "NoFeasiblePointError", "NonConvergenceError",
    "PlanePoint", "RRArmParams", "SensitivityGrid", "SpringDesign",
    "SpringSpec", "SpringWireGeometry", "TabulatedTorque", "TangencySolution",
    "WireState", "WrapcamError", "arc_length", "body_curve", "cam_point",
    "cam_torque_finite", "cam_torque_infinite", "cam_torques_2dof",
    "convexity_margin", "coupling_spring_extension_2dof", "design_spring",
    "distributed_wire_force", "dtau_dk_finite", "dtau_dk_infinite", "eval_rho",
    "evaluate_metrics", "export_profile_csv", "friction_mu_from_slip",
    "normal_spring_extension", "objective_1dof", "objective_2dof",
    "optimize_design", "polynomial_torque", "rr_gravity_torques",
    "sensitivity_objective", "solve_extension_state", "solve_tangency",
    "sweep_tangency", "tangent_unit", "tangency_residual", "wire_tension",
    "wrap_spring_extension",
]
