"""Two-wheel robot model: physical parameters, LTI reduction, pose kinematics.

The robot's longitudinal and rotational dynamics are

    m dv/dt     = F - B_v v,        F = k_m e_m,
    J domega/dt = T - B_omega omega, T = k_d e_d,

which reduce to a decoupled 2x2 LTI system in the state (v, omega) driven by
the mean and differential motor voltages (e_m, e_d). The wheel-force split and
the planar pose integration are diagnostics for trajectory output; they do not
feed back into the control problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .smallmat import as_matrix, as_vector


@dataclass(frozen=True)
class RobotParams:
    """Physical constants of the differential-drive robot.

    m        mass [kg]
    J        moment of inertia [kg m^2]
    B_v      translational friction coefficient [N s/m]
    B_omega  rotational friction coefficient [N m s/rad]
    l        wheel separation [m]
    k_m      force per volt of mean voltage [N/V]
    k_d      torque per volt of differential voltage [N m/V]
    """

    m: float
    J: float
    B_v: float
    B_omega: float
    l: float
    k_m: float
    k_d: float

    def __post_init__(self):
        for name in ("m", "J", "l"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("B_v", "B_omega"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("k_m", "k_d"):
            if getattr(self, name) == 0:
                raise ValueError(f"{name} must be nonzero")
        for name in ("m", "J", "B_v", "B_omega", "l", "k_m", "k_d"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True, eq=False)
class LtiPlant:
    """State-space plant dx/dt = A x + B u(t - h) with constant input delay h."""

    A: np.ndarray
    B: np.ndarray
    h: float

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.shape[0] != A.shape[0]:
            raise ValueError(f"B row count {B.shape[0]} does not match A dimension {A.shape[0]}")
        if not np.all(np.isfinite(B)):
            raise ValueError("B has non-finite entries")
        if not (math.isfinite(self.h) and self.h >= 0):
            raise ValueError(f"delay h must be >= 0, got {self.h}")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m_in(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class RobotState:
    """Linear speed v [m/s] and angular speed omega [rad/s]."""

    v: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.omega])

    @classmethod
    def from_array(cls, x) -> "RobotState":
        x = as_vector(x, 2, "robot state")
        return cls(float(x[0]), float(x[1]))


@dataclass(frozen=True)
class RobotControl:
    """Mean motor voltage e_m [V] and differential motor voltage e_d [V]."""

    e_m: float
    e_d: float

    def as_array(self) -> np.ndarray:
        return np.array([self.e_m, self.e_d])

    @classmethod
    def from_array(cls, u) -> "RobotControl":
        u = as_vector(u, 2, "robot control")
        return cls(float(u[0]), float(u[1]))


@dataclass(frozen=True)
class WheelForces:
    """Net force/torque and their split into right/left wheel forces."""

    F: float
    T: float
    F_R: float
    F_L: float


@dataclass(frozen=True)
class Pose:
    """Planar pose; heading is wrapped to (-pi, pi]."""

    x_pos: float = 0.0
    y_pos: float = 0.0
    heading: float = 0.0


def params_to_lti(p: RobotParams, h: float) -> LtiPlant:
    """Reduce the physical parameters to the delayed LTI plant.

    A = diag(-B_v/m, -B_omega/J), B = diag(k_m/m, k_d/J). The damping signs
    come from the physics: non-negative friction always yields a stable or
    marginally stable A.
    """
    A = np.diag([-p.B_v / p.m, -p.B_omega / p.J])
    B = np.diag([p.k_m / p.m, p.k_d / p.J])
    return LtiPlant(A, B, h)


def actuator_forces(p: RobotParams, u: RobotControl) -> WheelForces:
    """Per-wheel forces realizing the commanded voltages.

    F = k_m e_m and T = k_d e_d; inverting the force/torque aggregation gives
    F_R = (F + T/l)/2 and F_L = (F - T/l)/2, so F_R + F_L = F and
    l (F_R - F_L) = T hold by construction.
    """
    F = p.k_m * u.e_m
    T = p.k_d * u.e_d
    half_diff = T / p.l / 2.0
    return WheelForces(F=F, T=T, F_R=F / 2.0 + half_diff, F_L=F / 2.0 - half_diff)


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2.0 * math.pi)


def integrate_pose(pose: Pose, v: float, omega: float, dt: float) -> Pose:
    """Advance the unicycle kinematics one RK4 step with (v, omega) held constant.

    dx/dt = v cos(heading), dy/dt = v sin(heading), d(heading)/dt = omega.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")

    def deriv(psi):
        return v * math.cos(psi), v * math.sin(psi), omega

    psi = pose.heading
    k1 = deriv(psi)
    k2 = deriv(psi + 0.5 * dt * k1[2])
    k3 = deriv(psi + 0.5 * dt * k2[2])
    k4 = deriv(psi + dt * k3[2])
    x = pose.x_pos + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    y = pose.y_pos + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    psi_new = psi + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return Pose(x, y, wrap_angle(psi_new))
