"""
hrom - Reduced-order model of a thruster-assisted quadruped

Simulates the body of a quadruped with four electric ducted fans walking
a heuristic diagonal gait, and refines the thrust commands with
direct-collocation trajectory optimization.
"""

__version__ = "0.1.0"
__author__ = "Developer"
__email__ = "dev@example.com"

# Import main components for easy access
from .config import RunConfig, load_config
from .contact import GroundForce, GroundParams, ground_reaction
from .dynamics import ControlInput, ThrusterForces, Wrench, state_derivative, thruster_wrench, wrench_allocation
from .exceptions import ConfigError, HromError, SolverError
from .gait import GaitParams, GaitPlan, JointReference, bezier_eval, build_gait, joint_reference
from .model import (
    BodyPose,
    BodyVelocity,
    EulerAngles,
    FullState,
    LegJoints,
    RobotParams,
    euler_rates,
    foot_jacobian,
    foot_position_world,
    leg_inverse_kinematics,
)
from .sim import SimConfig, Trajectory, attitude_thrust_controller, rk4_step, simulate

__all__ = [
    "RunConfig",
    "load_config",
    "GroundForce",
    "GroundParams",
    "ground_reaction",
    "ControlInput",
    "ThrusterForces",
    "Wrench",
    "state_derivative",
    "thruster_wrench",
    "wrench_allocation",
    "ConfigError",
    "HromError",
    "SolverError",
    "GaitParams",
    "GaitPlan",
    "JointReference",
    "bezier_eval",
    "build_gait",
    "joint_reference",
    "BodyPose",
    "BodyVelocity",
    "EulerAngles",
    "FullState",
    "LegJoints",
    "RobotParams",
    "euler_rates",
    "foot_jacobian",
    "foot_position_world",
    "leg_inverse_kinematics",
    "SimConfig",
    "Trajectory",
    "attitude_thrust_controller",
    "rk4_step",
    "simulate",
]
