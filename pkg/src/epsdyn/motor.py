"""Linearized synchronous-frame PMSM, transport lags, MTPA and velocity estimation.

Velocities are mechanical rad/s; the electrical velocity is ``p * omega_m``.
The cross-coupling sign convention is:
``V_d = R I_d + L_d dI_d/dt + p w L_q I_q`` and
``V_q = R I_q + L_q dI_q/dt - p w L_d I_d + p w lambda_m``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields

import numpy as np

from .params import ParameterError, check_finite, check_nonnegative, check_positive
from .tf_core import DelayRational, Polynomial

Q_CONST = 1.5


@dataclass(frozen=True)
class MotorParams:
    p: int
    lambda_m: float
    L_d: float
    L_q: float
    R: float
    q_const: float = Q_CONST

    def __post_init__(self):
        errs = []
        if isinstance(self.p, bool) or not isinstance(self.p, (int, np.integer)) or self.p <= 0:
            errs.append(f"p: must be a positive integer, got {self.p!r}")
        for name in ("lambda_m", "L_d", "L_q", "R"):
            errs += check_positive(name, getattr(self, name))
        if self.q_const != Q_CONST:
            errs.append(f"q_const: must equal {Q_CONST}, got {self.q_const!r}")
        if errs:
            raise ParameterError(errs)

    @property
    def torque_constant(self) -> float:
        """``q p lambda_m`` in N*m/A."""
        return self.q_const * self.p * self.lambda_m


@dataclass(frozen=True)
class EstimatedParams:
    lambda_m_hat: float
    L_d_hat: float
    L_q_hat: float
    R_hat: float

    def __post_init__(self):
        errs = []
        for f in fields(self):
            errs += check_positive(f.name, getattr(self, f.name))
        if errs:
            raise ParameterError(errs)

    @classmethod
    def perfect(cls, mp: MotorParams) -> "EstimatedParams":
        return cls(mp.lambda_m, mp.L_d, mp.L_q, mp.R)


@dataclass(frozen=True)
class DelayParams:
    tau_c: float = 0.0
    tau_p: float = 0.0

    def __post_init__(self):
        errs = check_nonnegative("tau_c", self.tau_c) + check_nonnegative("tau_p", self.tau_p)
        if errs:
            raise ParameterError(errs)

    @property
    def total(self) -> float:
        return self.tau_c + self.tau_p


class VelocityVariant(str, enum.Enum):
    PHYSICAL = "physical"
    PAPER = "paper"


@dataclass(frozen=True)
class VelocityEstimator:
    """Velocity-estimate dynamics ``omega_hat = H_w omega_m``.

    ``physical``: ``H_w = 1/(tau_omega s + 1)`` (low-pass of the true velocity).
    ``paper``: ``H_w = s/(tau_omega s + 1)`` literally, which has zero DC gain.
    """

    tau_omega: float = 0.0
    variant: VelocityVariant = VelocityVariant.PHYSICAL

    def __post_init__(self):
        errs = check_nonnegative("tau_omega", self.tau_omega)
        try:
            object.__setattr__(self, "variant", VelocityVariant(self.variant))
        except ValueError:
            errs.append(f"variant: must be 'physical' or 'paper', got {self.variant!r}")
        if errs:
            raise ParameterError(errs)


def steady_state_voltage(mp: MotorParams, I_d: float, I_q: float, omega_m: float):
    """Nonlinear dq voltage balance at constant currents and speed."""
    we = mp.p * omega_m
    V_d = mp.R * I_d + we * mp.L_q * I_q
    V_q = mp.R * I_q - we * mp.L_d * I_d + we * mp.lambda_m
    return V_d, V_q


@dataclass(frozen=True)
class OperatingPoint:
    """Linearization set-point; build with :meth:`steady` so the voltages are consistent."""

    I_d0: float = 0.0
    I_q0: float = 0.0
    omega_m0: float = 0.0
    V_d0: float = 0.0
    V_q0: float = 0.0

    def __post_init__(self):
        errs = []
        for f in fields(self):
            errs += check_finite(f.name, getattr(self, f.name))
        if errs:
            raise ParameterError(errs)

    @classmethod
    def steady(cls, mp: MotorParams, I_d0=0.0, I_q0=0.0, omega_m0=0.0) -> "OperatingPoint":
        V_d0, V_q0 = steady_state_voltage(mp, I_d0, I_q0, omega_m0)
        return cls(float(I_d0), float(I_q0), float(omega_m0), float(V_d0), float(V_q0))

    def check(self, mp: MotorParams, tol: float = 1e-12) -> None:
        V_d, V_q = steady_state_voltage(mp, self.I_d0, self.I_q0, self.omega_m0)
        scale = max(1.0, abs(V_d), abs(V_q))
        if abs(V_d - self.V_d0) > tol * scale or abs(V_q - self.V_q0) > tol * scale:
            raise ParameterError(
                [f"operating point voltages ({self.V_d0}, {self.V_q0}) do not match the "
                 f"steady state ({V_d}, {V_q})"]
            )


@dataclass(frozen=True, eq=False)
class TfMatrix2:
    """2x2 matrix of scalar transfer functions."""

    dd: DelayRational
    dq: DelayRational
    qd: DelayRational
    qq: DelayRational

    @classmethod
    def diag(cls, d: DelayRational, q: DelayRational) -> "TfMatrix2":
        z = DelayRational.zero()
        return cls(d, z, z, q)

    def entries(self):
        return (self.dd, self.dq, self.qd, self.qq)

    def evaluate(self, omegas) -> np.ndarray:
        w = np.atleast_1d(np.asarray(omegas, dtype=np.float64))
        out = np.empty((w.size, 2, 2), dtype=np.complex128)
        out[:, 0, 0] = self.dd.evaluate(w)
        out[:, 0, 1] = self.dq.evaluate(w)
        out[:, 1, 0] = self.qd.evaluate(w)
        out[:, 1, 1] = self.qq.evaluate(w)
        return out


def mtpa_map(T_cmd: float, mp: MotorParams) -> tuple[float, float]:
    """Current references for a torque command: ``I_d = 0``, ``I_q = T/(q p lambda_m)``."""
    return 0.0, T_cmd / mp.torque_constant


def torque_from_iq(I_q: float, mp: MotorParams) -> float:
    return mp.torque_constant * I_q


def linearized_plant(mp: MotorParams, op: OperatingPoint):
    """Impedance matrix ``P^-1`` and back-EMF vector ``E`` of the perturbation model.

    ``dV = P^-1(s) dI + E d(omega_m)``.
    """
    we0 = mp.p * op.omega_m0
    P_inv = TfMatrix2(
        dd=DelayRational(Polynomial([mp.R, mp.L_d]), 1.0),
        dq=DelayRational.gain(we0 * mp.L_q),
        qd=DelayRational.gain(-we0 * mp.L_d),
        qq=DelayRational(Polynomial([mp.R, mp.L_q]), 1.0),
    )
    E = np.array([mp.p * mp.L_q * op.I_q0, -mp.p * mp.L_d * op.I_d0 + mp.p * mp.lambda_m])
    return P_inv, E


def delay_elements(dp: DelayParams) -> tuple[TfMatrix2, TfMatrix2]:
    """Current-measurement lag ``B`` and inverter lag ``X`` as diagonal matrices."""
    B = TfMatrix2.diag(DelayRational.pure_delay(dp.tau_c), DelayRational.pure_delay(dp.tau_c))
    X = TfMatrix2.diag(DelayRational.pure_delay(dp.tau_p), DelayRational.pure_delay(dp.tau_p))
    return B, X


def velocity_estimator_tf(ve: VelocityEstimator) -> DelayRational:
    lag = Polynomial([1.0, ve.tau_omega])
    if ve.variant is VelocityVariant.PAPER:
        return DelayRational(Polynomial([0.0, 1.0]), lag)
    return DelayRational(Polynomial([1.0]), lag)


__all__ = [
    "DelayParams",
    "EstimatedParams",
    "MotorParams",
    "OperatingPoint",
    "Q_CONST",
    "TfMatrix2",
    "VelocityEstimator",
    "VelocityVariant",
    "delay_elements",
    "linearized_plant",
    "mtpa_map",
    "steady_state_voltage",
    "torque_from_iq",
    "velocity_estimator_tf",
]
