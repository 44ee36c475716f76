"""Deterministic fixed-step closed-loop simulation of the delayed plant.

The plant is propagated by its exact zero-order-hold discretization, so the
delay-compensation claim becomes a machine-checkable identity rather than an
O(dt^k) approximation: with exact prediction, the control applied at t - h
equals the undelayed feedback evaluated at x(t), and the t >= h trajectory is
the undelayed closed-loop trajectory shifted by h.

To make the sampled loop agree with the continuous-time design at sample
instants, the loop applies the discrete-matched gain
Kd = Bd^{-1} (e^{(A + B K) dt} - Ad): then Ad + Bd Kd = e^{(A + B K) dt}
exactly, i.e. holding u = u* + Kd (x_k - x*) over one sample reproduces the
continuous closed loop dx/dt = (A + B K)(x - x*) at every sample time. For
small dt, Kd -> K. Plants whose Bd is not square-invertible fall back to the
raw design gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .control import (
    DelayLine,
    Gain,
    RegulatorState,
    Setpoint,
    naive_control,
    predict_deviation,
    regulator_step,
)
from .robot import LtiPlant, Pose, integrate_pose
from .smallmat import SingularMatrixError, as_vector, mat_exp, solve, zoh_discretize

CONTROLLERS = ("nodelay", "naive", "predictor-zform", "predictor-window")

_H_ALIGN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Scenario:
    """One closed-loop run: plant, controller selection and sampling grid."""

    plant: LtiPlant
    gain: Gain
    setpoint: Setpoint
    controller: str
    x0: np.ndarray
    dt: float
    T: float
    divergence_threshold: float = 1e6
    e_max: float | None = None

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}; choose from {CONTROLLERS}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.T >= self.dt:
            raise ValueError(f"horizon T must be >= dt, got T={self.T}, dt={self.dt}")
        if not self.divergence_threshold > 0:
            raise ValueError("divergence_threshold must be > 0")
        if self.e_max is not None and not self.e_max > 0:
            raise ValueError("e_max must be > 0 when set")
        n_delay = round(self.plant.h / self.dt)
        if abs(n_delay * self.dt - self.plant.h) > _H_ALIGN_TOL:
            raise ValueError(
                f"delay h={self.plant.h} is not an integer multiple of dt={self.dt}"
            )
        x0 = as_vector(self.x0, self.plant.n, "x0")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)

    @property
    def delay_steps(self) -> int:
        return round(self.plant.h / self.dt)


@dataclass
class Trajectory:
    """Uniformly sampled closed-loop record.

    ``predictions[k]`` is the forecast of the state at t_k + h issued at t_k
    (NaN rows for non-predictor controllers). ``poses`` holds the integrated
    planar pose for two-state (v, omega) plants and zeros otherwise.
    """

    t: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    predictions: np.ndarray
    poses: np.ndarray
    status: str  # "completed" | "diverged"
    t_d: float | None
    dt: float
    h: float
    controller: str


@dataclass
class Metrics:
    """Settling and prediction-accuracy summary of one trajectory."""

    settled: bool
    settling_time: float | None
    max_excursion: float
    max_prediction_error: float | None
    diverged: bool


def step_plant(plant: LtiPlant, x, u_delayed, dt: float, disc=None) -> np.ndarray:
    """One exact ZOH step: x+ = Ad x + Bd u with the delayed input held."""
    x = as_vector(x, plant.n, "state")
    u = as_vector(u_delayed, plant.m_in, "control")
    Ad, Bd = disc if disc is not None else zoh_discretize(plant.A, plant.B, dt)
    return Ad @ x + Bd @ u


def step_plant_rk4(plant: LtiPlant, x, u_delayed, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step with the input held constant.

    Kept for convergence-order checks against the exact stepper; the closed
    loop itself always uses :func:`step_plant`.
    """
    x = as_vector(x, plant.n, "state")
    u = as_vector(u_delayed, plant.m_in, "control")
    A, B = plant.A, plant.B
    bu = B @ u

    def f(xi):
        return A @ xi + bu

    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def matched_gain(plant: LtiPlant, K: np.ndarray, dt: float) -> np.ndarray:
    """Discrete-matched feedback gain for the sampling period ``dt``.

    Solves Bd Kd = e^{(A + B K) dt} - Ad so the sampled loop reproduces the
    continuous closed loop exactly at sample instants. Returns K unchanged
    when Bd is not square or is singular.
    """
    Ad, Bd = zoh_discretize(plant.A, plant.B, dt)
    if Bd.shape[0] != Bd.shape[1]:
        return np.asarray(K, dtype=float)
    target = mat_exp(plant.A + plant.B @ K, dt) - Ad
    try:
        cols = [solve(Bd.copy(), target[:, j]) for j in range(target.shape[1])]
    except SingularMatrixError:
        return np.asarray(K, dtype=float)
    return np.column_stack(cols)


def run(scenario: Scenario) -> tuple[Trajectory, Metrics]:
    """Simulate one scenario; returns the trajectory and its metrics.

    Per sample: read x(t), compute u(t), push it into the delay line, let the
    plant consume u(t - h) (the current u for the nodelay controller), take
    one exact ZOH step and integrate the pose. Terminates early when the state
    inf-norm exceeds the divergence threshold.
    """
    plant, sp = scenario.plant, scenario.setpoint
    dt, n = scenario.dt, plant.n
    steps = round(scenario.T / dt)
    n_delay = scenario.delay_steps
    disc = zoh_discretize(plant.A, plant.B, dt)
    Kd = matched_gain(plant, scenario.gain.K, dt)
    loop_gain = Gain(Kd)
    exp_h = mat_exp(plant.A, plant.h)

    is_predictor = scenario.controller in ("predictor-zform", "predictor-window")
    use_line = scenario.controller != "nodelay" and n_delay > 0
    line = DelayLine(dt, n_delay, fill=sp.u_star) if use_line else None
    reg = None
    disc_neg = None
    if scenario.controller == "predictor-zform":
        reg = RegulatorState.initial(plant, "zform", depth=n_delay)
        disc_neg = zoh_discretize(-plant.A, plant.B, dt)

    t_arr = np.empty(steps + 1)
    states = np.full((steps + 1, n), np.nan)
    controls = np.full((steps + 1, plant.m_in), np.nan)
    predictions = np.full((steps + 1, n), np.nan)
    poses = np.zeros((steps + 1, 3))

    x = scenario.x0.copy()
    pose = Pose()
    status, t_d = "completed", None
    recorded = 0

    for k in range(steps + 1):
        t = k * dt
        if not np.all(np.isfinite(x)):
            status, t_d = "diverged", t
            break

        if is_predictor:
            dev = predict_deviation(plant, sp, x, reg, line, disc=disc, exp_h=exp_h)
            xhat = sp.x_star + dev
            u = sp.u_star + Kd @ dev
        else:
            xhat = None
            u = naive_control(loop_gain, sp, x)
        if scenario.e_max is not None:
            u = np.clip(u, -scenario.e_max, scenario.e_max)

        t_arr[k] = t
        states[k] = x
        controls[k] = u
        if xhat is not None:
            predictions[k] = xhat
        poses[k] = (pose.x_pos, pose.y_pos, pose.heading)
        recorded = k + 1

        if np.linalg.norm(x, np.inf) > scenario.divergence_threshold:
            status, t_d = "diverged", t
            break
        if k == steps:
            break

        if scenario.controller == "nodelay":
            u_delayed = u
        elif line is None:  # h == 0 with a delayed controller
            u_delayed = u
        else:
            line.push(u)
            u_delayed = line.lookup(t - plant.h)
        if reg is not None:
            # regulator_step shifts by u* internally via the setpoint
            regulator_step(plant, reg, u, dt, setpoint=sp, disc_neg=disc_neg)
        if n == 2:
            pose = integrate_pose(pose, x[0], x[1], dt)
        x = step_plant(plant, x, u_delayed, dt, disc=disc)

    traj = Trajectory(
        t=t_arr[:recorded],
        states=states[:recorded],
        controls=controls[:recorded],
        predictions=predictions[:recorded],
        poses=poses[:recorded],
        status=status,
        t_d=t_d,
        dt=dt,
        h=plant.h,
        controller=scenario.controller,
    )
    return traj, compute_metrics(traj, sp, scenario.x0)


def compute_metrics(traj: Trajectory, setpoint: Setpoint, x0) -> Metrics:
    """Settling (2% band on the inf-norm of the initial offset) and
    prediction-pair accuracy."""
    x0 = as_vector(x0, name="x0")
    diverged = traj.status == "diverged"
    err = np.linalg.norm(traj.states - setpoint.x_star, np.inf, axis=1)
    max_excursion = float(np.max(err)) if len(err) else 0.0

    offset0 = float(np.linalg.norm(x0 - setpoint.x_star, np.inf))
    if diverged:
        settled, settling_time = False, None
    elif offset0 == 0.0:
        settled, settling_time = True, 0.0
    else:
        band = 0.02 * offset0
        violations = np.nonzero(err > band)[0]
        if len(violations) == 0:
            settled, settling_time = True, 0.0
        elif violations[-1] == len(err) - 1:
            settled, settling_time = False, None
        else:
            settled, settling_time = True, float(traj.t[violations[-1] + 1])

    max_prediction_error = None
    if traj.controller in ("predictor-zform", "predictor-window"):
        n_delay = round(traj.h / traj.dt)
        issued = traj.predictions[: len(traj.states) - n_delay] if n_delay else traj.predictions
        realized = traj.states[n_delay:]
        if len(issued):
            pair_err = np.linalg.norm(issued - realized, np.inf, axis=1)
            max_prediction_error = float(np.max(pair_err))
        else:
            max_prediction_error = 0.0
    return Metrics(
        settled=settled,
        settling_time=settling_time,
        max_excursion=max_excursion,
        max_prediction_error=max_prediction_error,
        diverged=diverged,
    )


def sweep_delay(base_scenario: Scenario, h_values) -> list[tuple[float, Metrics, Metrics]]:
    """Run naive vs. predictor-window pairs over a list of delays.

    Each h must be an integer multiple of the scenario's dt. Results keep the
    input order.
    """
    out = []
    for h in h_values:
        plant = LtiPlant(base_scenario.plant.A, base_scenario.plant.B, float(h))
        naive = replace(base_scenario, plant=plant, controller="naive")
        pred = replace(base_scenario, plant=plant, controller="predictor-window")
        _, m_naive = run(naive)
        _, m_pred = run(pred)
        out.append((float(h), m_naive, m_pred))
    return out
