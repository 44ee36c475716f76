"""Gain design, setpoint handling, the delay line, the state predictor and
the delay-compensating regulator.

The controller for the delayed plant dx/dt = A x + B u(t-h) is predictor
feedback: apply the stabilizing state feedback not to the measured state but
to its exact h-second-ahead forecast

    xhat(t+h) = e^{Ah} x(t) + integral_{t-h}^{t} e^{A(t-theta)} B u(theta) dtheta,

which under zero-order-hold inputs collapses to a finite sum over the last
N = h/dt applied controls. Two realizations of the same control law are
provided:

- window form (default): the sliding integral above, whose exponential
  argument is bounded by h;
- z form: the literal dynamic-regulator realization through the auxiliary
  running integral z(t) = integral_0^t e^{-A theta} B u(theta) dtheta, with
  xhat(t+h) = e^{Ah} x(t) + e^{At} [z(t) - z(t-h)] and z identically zero on
  [-h, 0]. The separate e^{At} / e^{-At} factors grow without bound for
  non-neutral A, so the z form is only advisable on short horizons; it is
  kept because the window form is validated against it.

Nonzero setpoints are handled by an affine shift: with u* = -B^{-1} A x*, the
shifted pair (x - x*, u - u*) satisfies the origin-stabilization problem, so
the delay line is prefilled with u* and the regulator works on deviations.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .robot import LtiPlant
from .smallmat import as_vector, is_hurwitz, mat_exp, solve, zoh_discretize

_H_ALIGN_TOL = 1e-9


class UnsupportedStructureError(ValueError):
    """Plant structure outside what the closed-form design handles."""


class InsufficientHistoryError(ValueError):
    """Delay line does not cover the requested time window."""


class RegulatorModeError(RuntimeError):
    """Operation applied to a regulator state in the wrong mode."""


@dataclass(frozen=True, eq=False)
class Gain:
    """State-feedback gain u = K x (m_in x n). Build via :meth:`for_plant`
    or :func:`design_gain` so the closed-loop stability check runs."""

    K: np.ndarray

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        if not np.all(np.isfinite(K)):
            raise ValueError("gain matrix has non-finite entries")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)

    @classmethod
    def for_plant(cls, K, plant: LtiPlant) -> "Gain":
        g = cls(np.asarray(K, dtype=float))
        if g.K.shape != (plant.m_in, plant.n):
            raise ValueError(f"gain shape {g.K.shape} does not match plant ({plant.m_in}, {plant.n})")
        if not is_hurwitz(plant.A + plant.B @ g.K):
            raise ValueError("A + B K is not Hurwitz for this plant")
        return g


@dataclass(frozen=True, eq=False)
class Setpoint:
    """Target state x* and the matching equilibrium control u*.

    Build via :func:`make_setpoint`, which enforces A x* + B u* = 0.
    """

    x_star: np.ndarray
    u_star: np.ndarray

    def __post_init__(self):
        x = as_vector(self.x_star, name="x_star")
        u = as_vector(self.u_star, name="u_star")
        x.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "x_star", x)
        object.__setattr__(self, "u_star", u)


def design_gain(plant: LtiPlant, desired_poles) -> Gain:
    """Pole placement for decoupled diagonal plants.

    Per channel k_i = (lambda_i - a_ii) / b_ii so A + B K = diag(lambda). Only
    diagonal A and B are supported; for anything else supply K directly via
    ``Gain.for_plant``.
    """
    poles = as_vector(desired_poles, plant.n, "desired_poles")
    if np.any(poles >= 0):
        raise ValueError(f"all desired poles must be < 0, got {poles.tolist()}")
    A, B = plant.A, plant.B
    diag_ok = (
        plant.m_in == plant.n
        and np.count_nonzero(A - np.diag(np.diagonal(A))) == 0
        and np.count_nonzero(B - np.diag(np.diagonal(B))) == 0
        and np.all(np.diagonal(B) != 0)
    )
    if not diag_ok:
        raise UnsupportedStructureError(
            "pole placement implemented for diagonal A, B with nonzero input gains only; "
            "supply K manually via Gain.for_plant"
        )
    k = (poles - np.diagonal(A)) / np.diagonal(B)
    return Gain.for_plant(np.diag(k), plant)


def equilibrium_input(plant: LtiPlant, x_star) -> np.ndarray:
    """Control holding the plant at x*: u* = -B^{-1} A x* (square B)."""
    x_star = as_vector(x_star, plant.n, "x_star")
    if plant.m_in != plant.n:
        raise UnsupportedStructureError("equilibrium input needs a square input matrix")
    return solve(plant.B.copy(), -plant.A @ x_star)


def make_setpoint(plant: LtiPlant, x_star) -> Setpoint:
    """Build a validated setpoint from the target state."""
    x_star = as_vector(x_star, plant.n, "x_star")
    u_star = equilibrium_input(plant, x_star)
    residual = np.linalg.norm(plant.A @ x_star + plant.B @ u_star, np.inf)
    if residual > 1e-10 * (1.0 + np.linalg.norm(x_star, np.inf)):
        raise ValueError(f"steady-state identity violated, residual {residual:g}")
    return Setpoint(x_star, u_star)


def origin_setpoint(plant: LtiPlant) -> Setpoint:
    return Setpoint(np.zeros(plant.n), np.zeros(plant.m_in))


class DelayLine:
    """Zero-order-hold history of applied controls.

    ``depth`` is N = h/dt. The line stores N+1 samples: the N samples whose
    hold intervals tile [t-h, t) plus the newest push holding [t, t+dt), where
    ``t`` is the timestamp of the newest push. Keeping the extra sample lets
    the plant read u(t-h) after the current control has been pushed, while the
    predictor (which runs before the push) reads the N most recent samples.
    The line is prefilled with the equilibrium control.
    """

    def __init__(self, dt: float, depth: int, fill):
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        if depth < 0:
            raise ValueError(f"depth must be >= 0, got {depth}")
        self.dt = float(dt)
        self.depth = int(depth)
        fill = as_vector(fill, name="fill")
        self._buf: deque[np.ndarray] = deque(
            (fill.copy() for _ in range(depth + 1)), maxlen=depth + 1
        )
        self.t = -self.dt  # timestamp of the newest push

    @property
    def h(self) -> float:
        return self.depth * self.dt

    def push(self, u) -> None:
        self._buf.append(as_vector(u, name="control").copy())
        self.t += self.dt

    def lookup(self, tau: float) -> np.ndarray:
        """Sample whose hold interval [t_i, t_i + dt) contains ``tau``.

        Defined for tau in [t - h, t + dt), i.e. any stored sample.
        """
        i = math.floor((tau - (self.t - self.h)) / self.dt + _H_ALIGN_TOL)
        if not 0 <= i <= self.depth:
            raise InsufficientHistoryError(
                f"time {tau} outside covered window [{self.t - self.h}, {self.t + self.dt})"
            )
        return self._buf[i]

    def recent(self, n: int | None = None) -> list[np.ndarray]:
        """The ``n`` most recent samples, oldest first (default: depth)."""
        n = self.depth if n is None else n
        if n > len(self._buf):
            raise InsufficientHistoryError(f"{n} samples requested, {len(self._buf)} stored")
        return [self._buf[i] for i in range(len(self._buf) - n, len(self._buf))]


@dataclass
class RegulatorState:
    """Mutable per-simulation regulator bookkeeping.

    In z mode, ``z`` is the running integral at time ``t`` and ``z_history``
    holds its last N samples so z(t-h) is addressable; both start at zero,
    matching z == 0 on [-h, 0]. In window mode the z fields stay at zero.
    """

    mode: str  # "window" | "zform"
    z: np.ndarray
    z_history: deque = field(default_factory=deque)
    t: float = 0.0

    @classmethod
    def initial(cls, plant: LtiPlant, mode: str, depth: int) -> "RegulatorState":
        if mode not in ("window", "zform"):
            raise ValueError(f"unknown regulator mode {mode!r}")
        n = plant.n
        return cls(
            mode=mode,
            z=np.zeros(n),
            z_history=deque((np.zeros(n) for _ in range(depth)), maxlen=depth),
        )


def _delayed_window(plant: LtiPlant, line: DelayLine | None) -> list[np.ndarray]:
    n_samples = 0 if line is None else line.depth
    if line is not None and abs(line.h - plant.h) > _H_ALIGN_TOL:
        raise InsufficientHistoryError(
            f"delay line covers {line.h} s, plant delay is {plant.h} s"
        )
    if line is None and plant.h > _H_ALIGN_TOL:
        raise InsufficientHistoryError("plant has a delay but no history was given")
    return [] if n_samples == 0 else line.recent(n_samples)


def predict_state(plant: LtiPlant, x, line: DelayLine | None, disc=None) -> np.ndarray:
    """Exact h-second-ahead state forecast under zero-order-hold inputs.

    xhat(t+h) = Ad^N x + sum_i Ad^{N-1-i} Bd u_i with (Ad, Bd) the exact
    one-step discretization; Ad^N = e^{Ah}. ``disc`` may carry a precomputed
    (Ad, Bd) pair for the line's sample period.
    """
    x = as_vector(x, plant.n, "state")
    window = _delayed_window(plant, line)
    if not window:
        return x.copy()
    Ad, Bd = disc if disc is not None else zoh_discretize(plant.A, plant.B, line.dt)
    p = x
    for u in window:
        p = Ad @ p + Bd @ u
    return p


def predict_deviation(
    plant: LtiPlant,
    setpoint: Setpoint,
    x,
    reg: RegulatorState | None,
    line: DelayLine | None,
    disc=None,
    exp_h: np.ndarray | None = None,
) -> np.ndarray:
    """Forecast deviation xhat(t+h) - x*, per the regulator's mode.

    Window mode runs the sliding ZOH sum on the shifted inputs u - u*;
    z mode evaluates e^{Ah}(x - x*) + e^{At}[z(t) - z(t-h)].
    """
    x = as_vector(x, plant.n, "state")
    xt = x - setpoint.x_star
    if reg is None or reg.mode == "window":
        window = _delayed_window(plant, line)
        if not window:
            return xt
        Ad, Bd = disc if disc is not None else zoh_discretize(plant.A, plant.B, line.dt)
        p = xt
        for u in window:
            p = Ad @ p + Bd @ (u - setpoint.u_star)
        return p
    if exp_h is None:
        exp_h = mat_exp(plant.A, plant.h)
    z_old = reg.z_history[0] if len(reg.z_history) else reg.z
    return exp_h @ xt + mat_exp(plant.A, reg.t) @ (reg.z - z_old)


def regulator_control(
    plant: LtiPlant,
    gain: Gain,
    setpoint: Setpoint,
    x,
    reg: RegulatorState | None,
    line: DelayLine | None,
    disc=None,
    exp_h: np.ndarray | None = None,
) -> np.ndarray:
    """Predictor-feedback control u(t) = u* + K (xhat(t+h) - x*)."""
    dev = predict_deviation(plant, setpoint, x, reg, line, disc=disc, exp_h=exp_h)
    return setpoint.u_star + gain.K @ dev


def regulator_step(
    plant: LtiPlant,
    reg: RegulatorState,
    u_applied,
    dt: float,
    setpoint: Setpoint | None = None,
    disc_neg=None,
) -> RegulatorState:
    """Advance the auxiliary integral one exact ZOH step (z mode only).

    z satisfies dz/dt = e^{-At} B (u - u*); with the shifted control held
    constant over [t, t+dt] the exact increment is
    e^{-At} (integral_0^dt e^{-As} ds) B (u - u*), computed through the
    augmented exponential for -A. Window mode is a no-op.
    """
    if reg.mode != "zform":
        return reg
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    u = as_vector(u_applied, plant.m_in, "applied control")
    if setpoint is not None:
        u = u - setpoint.u_star
    if disc_neg is None:
        disc_neg = zoh_discretize(-plant.A, plant.B, dt)
    gamma = disc_neg[1]
    increment = mat_exp(plant.A, -reg.t) @ (gamma @ u)
    # maxlen-bounded deque drops the oldest sample on append
    reg.z_history.append(reg.z.copy())
    reg.z = reg.z + increment
    reg.t += dt
    return reg


def naive_control(gain: Gain, setpoint: Setpoint, x) -> np.ndarray:
    """Plain state feedback u = u* + K (x - x*), ignoring the delay."""
    x = as_vector(x, name="state")
    return setpoint.u_star + gain.K @ (x - setpoint.x_star)
