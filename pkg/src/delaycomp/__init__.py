"""Predictor-feedback compensation of a constant input delay for a linear
differential-drive robot model."""

from .control import (
    DelayLine,
    Gain,
    InsufficientHistoryError,
    RegulatorModeError,
    RegulatorState,
    Setpoint,
    UnsupportedStructureError,
    design_gain,
    equilibrium_input,
    make_setpoint,
    naive_control,
    predict_state,
    regulator_control,
    regulator_step,
)
from .robot import (
    LtiPlant,
    Pose,
    RobotControl,
    RobotParams,
    RobotState,
    WheelForces,
    actuator_forces,
    integrate_pose,
    params_to_lti,
)
from .sim import (
    CONTROLLERS,
    Metrics,
    Scenario,
    Trajectory,
    compute_metrics,
    run,
    step_plant,
    step_plant_rk4,
    sweep_delay,
)
from .smallmat import SingularMatrixError, is_hurwitz, mat_exp, solve, zoh_discretize

__version__ = "0.1.0"
