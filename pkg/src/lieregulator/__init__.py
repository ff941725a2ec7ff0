"""Output regulation on matrix Lie groups with relative measurements.

Modules:

- :mod:`.lie`: hat/vee, projection, exponential, retraction for SO(3), SE(2), SE(3)
- :mod:`.exosystem`: right-invariant reference generator
- :mod:`.regulator`: internal-model regulator for left-invariant kinematics
- :mod:`.so3`: attitude specialization, rigid-body backstepping, equilibria
- :mod:`.integrator`: Lie-Euler and RKMK4 fixed-step integration
- :mod:`.simulate`, :mod:`.scenario`, :mod:`.runner`, :mod:`.cli`: simulation harness
"""

__version__ = "0.1.0"

from .exosystem import ExoParams, ExosystemError, constant_exo, harmonic_exo
from .integrator import GroupSlot, HybridState, IntegrationError, Side, StepConfig, integrate, step
from .lie import GroupTag, LieContractError, exp_map, hat, proj_algebra, retract, vee
from .regulator import MeasurementSet, RegulatorGains, control, lyapunov
from .scenario import Scenario, ScenarioError, load_scenario, preset_names
from .simulate import ClosedLoop, TrajectoryLog, simulate
from .so3 import BackstepGains, RigidBody, backstep_torque, classify_equilibria, so3_kinematic_control

__all__ = [
    "BackstepGains", "ClosedLoop", "ExoParams", "ExosystemError", "GroupSlot", "GroupTag", "HybridState",
    "IntegrationError", "LieContractError", "MeasurementSet", "RegulatorGains", "RigidBody", "Scenario",
    "ScenarioError", "Side", "StepConfig", "TrajectoryLog", "backstep_torque", "classify_equilibria",
    "constant_exo", "control", "exp_map", "harmonic_exo", "hat", "integrate", "load_scenario", "lyapunov",
    "preset_names", "proj_algebra", "retract", "simulate", "so3_kinematic_control", "step", "vee",
]
