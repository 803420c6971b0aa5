"""Electric motor drive torque dynamics ``T_m = A_t T_m* + A_omega omega_m``.

Two current-control architectures are modelled:

feedforward
    voltage commands from an inverse motor model with estimated parameters,
    ``V* = C_t (I*) + C_omega omega_hat``;
feedback
    PI regulation of measured currents, ``V* = C_t (I* - I_hat) + C_omega omega_hat``.

``ff_closed_form`` / ``fb_closed_form`` give the zero-speed closed forms.
``block_compose_frf`` assembles the full 2x2 dq loop per frequency and is
valid at any operating point; it is the independent check on the closed forms.

The controller's Laplace variable ``s_hat`` defaults to ``s``. A filtered
variant ``s_hat = s/(tau_d s + 1)`` is available through :class:`SHat`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels
from .motor import (
    DelayParams,
    EstimatedParams,
    MotorParams,
    OperatingPoint,
    TfMatrix2,
    VelocityEstimator,
    linearized_plant,
    velocity_estimator_tf,
)
from .params import ParameterError, check_nonnegative, check_positive
from .tf_core import (
    DelayRational,
    FrequencyGrid,
    FrequencyResponse,
    Polynomial,
    dc_gain,
    pade_rationalize,
    sample,
)
from .tf_core.frequency import evaluator_of

Dynamic = Union[DelayRational, FrequencyResponse]


class Architecture(str, enum.Enum):
    FEEDFORWARD = "ff"
    FEEDBACK = "fb"


class SingularLoopError(ArithmeticError):
    """The dq loop matrix is singular at some frequency."""

    def __init__(self, omega: float):
        self.omega = omega
        super().__init__(f"singular current-loop matrix at omega = {omega!r} rad/s")


class MissingGainsError(ValueError):
    """Feedback control requested without PI gains."""


@dataclass(frozen=True)
class PiGains:
    K_pd: float
    K_id: float
    K_pq: float
    K_iq: float

    def __post_init__(self):
        errs = (
            check_nonnegative("K_pd", self.K_pd)
            + check_nonnegative("K_id", self.K_id)
            + check_nonnegative("K_pq", self.K_pq)
            + check_positive("K_iq", self.K_iq)
        )
        if errs:
            raise ParameterError(errs)


@dataclass(frozen=True)
class SHat:
    """Controller Laplace variable ``s_hat = s / (tau_d s + 1)``; ``tau_d = 0`` is exact ``s``."""

    tau_d: float = 0.0

    def __post_init__(self):
        errs = check_nonnegative("tau_d", self.tau_d)
        if errs:
            raise ParameterError(errs)

    @property
    def num(self) -> Polynomial:
        return Polynomial([0.0, 1.0])

    @property
    def den(self) -> Polynomial:
        return Polynomial([1.0, self.tau_d])

    def evaluate(self, omegas) -> np.ndarray:
        s = 1j * np.asarray(omegas, dtype=np.float64)
        return s / (self.tau_d * s + 1.0)


@dataclass(frozen=True, eq=False)
class ControllerLaw:
    C_t: TfMatrix2
    C_omega: tuple
    architecture: Architecture


@dataclass(frozen=True, eq=False)
class EmdResponse:
    """``(A_t, A_omega)`` pair, symbolic or sampled on a shared grid."""

    A_t: Dynamic
    A_omega: Dynamic
    form: str
    architecture: Optional[Architecture] = None

    @property
    def is_symbolic(self) -> bool:
        return self.form == "symbolic"

    @property
    def grid(self) -> Optional[FrequencyGrid]:
        if isinstance(self.A_t, FrequencyResponse):
            return self.A_t.grid
        return None

    def eval_A_t(self, omegas) -> np.ndarray:
        return evaluator_of(self.A_t)(np.atleast_1d(np.asarray(omegas, dtype=np.float64)))

    def eval_A_omega(self, omegas) -> np.ndarray:
        return evaluator_of(self.A_omega)(np.atleast_1d(np.asarray(omegas, dtype=np.float64)))

    def on_grid(self, grid: FrequencyGrid) -> "EmdResponse":
        return EmdResponse(sample(self.A_t, grid), sample(self.A_omega, grid), "sampled",
                           self.architecture)


def ideal_emd() -> EmdResponse:
    """Electrically transparent drive: ``A_t = 1``, ``A_omega = 0``."""
    return EmdResponse(DelayRational.gain(1.0), DelayRational.zero(), "symbolic", None)


def _delay_tf(tau: float, pade_order: Optional[int]) -> DelayRational:
    tf = DelayRational.pure_delay(tau)
    if pade_order is not None:
        tf = pade_rationalize(tf, pade_order)
    return tf


def _pack(A_t_sym, A_w_sym, A_t_eval, A_w_eval, arch, grid):
    if A_t_sym is not None and A_w_sym is not None:
        return EmdResponse(A_t_sym, A_w_sym, "symbolic", arch)
    grid = grid if grid is not None else FrequencyGrid.default()
    return EmdResponse(
        FrequencyResponse.from_function(A_t_eval, grid),
        FrequencyResponse.from_function(A_w_eval, grid),
        "sampled",
        arch,
    )


def ff_closed_form(
    mp: MotorParams,
    ep: EstimatedParams,
    dp: DelayParams,
    ve: VelocityEstimator,
    *,
    s_hat: SHat = SHat(),
    grid: Optional[FrequencyGrid] = None,
    pade_order: Optional[int] = None,
) -> EmdResponse:
    """Zero-speed feedforward drive dynamics.

    ``A_t = X (lambda/lambda_hat) (L_q_hat s_hat + R_hat)/(L_q s + R)``,
    ``A_omega = q p^2 lambda (X H_w lambda_hat - lambda)/(L_q s + R)``.

    ``A_omega`` is a difference of a delayed and an undelayed term, so with a
    nonzero inverter lag it is only available sampled, unless ``pade_order``
    asks for a rationalized symbolic version.
    """
    ratio = mp.lambda_m / ep.lambda_m_hat
    a, b = s_hat.num, s_hat.den
    plant = Polynomial([mp.R, mp.L_q])
    X = _delay_tf(dp.tau_p, pade_order)
    H = velocity_estimator_tf(ve)
    kq = mp.q_const * mp.p ** 2 * mp.lambda_m

    A_t = X * DelayRational((a * ep.L_q_hat + b * ep.R_hat) * ratio, b * plant)
    A_w = None
    if X.is_rational:
        A_w = (X * H * ep.lambda_m_hat - mp.lambda_m) * DelayRational(kq, plant)

    def eval_t(w):
        s = 1j * w
        sh = s_hat.evaluate(w)
        return np.exp(-1j * w * dp.tau_p) * ratio * (ep.L_q_hat * sh + ep.R_hat) / (mp.L_q * s + mp.R)

    def eval_w(w):
        s = 1j * w
        xh = np.exp(-1j * w * dp.tau_p) * H.evaluate(w)
        return kq * (xh * ep.lambda_m_hat - mp.lambda_m) / (mp.L_q * s + mp.R)

    if pade_order is not None:
        eval_t, eval_w = A_t.evaluate, A_w.evaluate
    return _pack(A_t, A_w, eval_t, eval_w, Architecture.FEEDFORWARD, grid)


def fb_closed_form(
    mp: MotorParams,
    ep: EstimatedParams,
    gains: PiGains,
    dp: DelayParams,
    ve: VelocityEstimator,
    *,
    s_hat: SHat = SHat(),
    grid: Optional[FrequencyGrid] = None,
    pade_order: Optional[int] = None,
) -> EmdResponse:
    """Zero-speed feedback (PI) drive dynamics.

    With ``Delta = L_q s s_hat + R s_hat + X B (K_pq s_hat + K_iq)``:
    ``A_t = X (lambda/lambda_hat)(K_pq s_hat + K_iq)/Delta`` and
    ``A_omega = q p^2 lambda (X H_w lambda_hat - lambda) s_hat / Delta``.

    The loop delay ``X B`` sits in the denominator, so any nonzero lag makes
    the result sampled unless ``pade_order`` is given.
    """
    if gains is None:
        raise MissingGainsError("feedback control needs PI gains")
    ratio = mp.lambda_m / ep.lambda_m_hat
    a, b = s_hat.num, s_hat.den
    plant = Polynomial([mp.R, mp.L_q])
    pi_num = a * gains.K_pq + b * gains.K_iq
    kq = mp.q_const * mp.p ** 2 * mp.lambda_m
    H = velocity_estimator_tf(ve)
    symbolic = dp.total == 0.0 or pade_order is not None
    A_t = A_w = None
    if symbolic:
        X = _delay_tf(dp.tau_p, pade_order)
        B = _delay_tf(dp.tau_c, pade_order)
        # Both sides of the loop equation were multiplied by a(s) to clear 1/s_hat.
        loop = DelayRational(plant * a, 1.0) + X * B * DelayRational(pi_num, 1.0)
        inv_loop = loop.inverse()
        A_t = X * DelayRational(pi_num * ratio, 1.0) * inv_loop
        A_w = (X * H * ep.lambda_m_hat - mp.lambda_m) * DelayRational(a * kq, 1.0) * inv_loop

    def _delta(w):
        s = 1j * w
        sh = s_hat.evaluate(w)
        xb = np.exp(-1j * w * dp.total)
        return (mp.L_q * s + mp.R) * sh + xb * (gains.K_pq * sh + gains.K_iq), sh

    def eval_t(w):
        d, sh = _delta(w)
        return np.exp(-1j * w * dp.tau_p) * ratio * (gains.K_pq * sh + gains.K_iq) / d

    def eval_w(w):
        d, sh = _delta(w)
        xh = np.exp(-1j * w * dp.tau_p) * H.evaluate(w)
        return kq * (xh * ep.lambda_m_hat - mp.lambda_m) * sh / d

    if pade_order is not None:
        eval_t, eval_w = A_t.evaluate, A_w.evaluate
    return _pack(A_t, A_w, eval_t, eval_w, Architecture.FEEDBACK, grid)


def controller_laws(
    architecture,
    mp: MotorParams,
    ep: EstimatedParams,
    gains: Optional[PiGains] = None,
    *,
    s_hat: SHat = SHat(),
    omega_hat0: float = 0.0,
    I_ref0: tuple = (0.0, 0.0),
) -> ControllerLaw:
    """Controller matrices, linearized about ``omega_hat0`` and reference currents ``I_ref0``."""
    arch = Architecture(architecture)
    a, b = s_hat.num, s_hat.den
    p = mp.p
    if arch is Architecture.FEEDFORWARD:
        we = p * omega_hat0
        C_t = TfMatrix2(
            dd=DelayRational(a * ep.L_d_hat + b * ep.R_hat, b),
            dq=DelayRational.gain(we * ep.L_q_hat),
            qd=DelayRational.gain(-we * ep.L_d_hat),
            qq=DelayRational(a * ep.L_q_hat + b * ep.R_hat, b),
        )
        C_w = (
            DelayRational.gain(p * ep.L_q_hat * I_ref0[1]),
            DelayRational.gain(-p * ep.L_d_hat * I_ref0[0] + p * ep.lambda_m_hat),
        )
        return ControllerLaw(C_t, C_w, arch)
    if gains is None:
        raise MissingGainsError("feedback control needs PI gains")
    C_t = TfMatrix2.diag(
        DelayRational(a * gains.K_pd + b * gains.K_id, a),
        DelayRational(a * gains.K_pq + b * gains.K_iq, a),
    )
    C_w = (DelayRational.zero(), DelayRational.gain(p * ep.lambda_m_hat))
    return ControllerLaw(C_t, C_w, arch)


def _delay_matrix(tau: float, w: np.ndarray) -> np.ndarray:
    return np.exp(-1j * w * tau)


def block_compose_frf(
    architecture,
    mp: MotorParams,
    ep: EstimatedParams,
    gains: Optional[PiGains],
    dp: DelayParams,
    ve: VelocityEstimator,
    op: OperatingPoint,
    grid: FrequencyGrid,
    *,
    s_hat: SHat = SHat(),
) -> EmdResponse:
    """Sampled ``(A_t, A_omega)`` from a per-frequency solve of the full dq loop.

    At each ``s = j omega`` the loop

        P^-1 dI + E dw = X dV*,    dV* = C_t (dI* [- B dI]) + C_omega H_w dw

    is solved for ``dI`` per unit torque command (through MTPA) and per unit
    speed perturbation. The controller is linearized about the operating
    point's currents and the steady velocity estimate ``H_w(0) omega_m0``.
    """
    arch = Architecture(architecture)
    H = velocity_estimator_tf(ve)
    omega_hat0 = dc_gain(H) * op.omega_m0
    law = controller_laws(arch, mp, ep, gains, s_hat=s_hat, omega_hat0=omega_hat0,
                          I_ref0=(op.I_d0, op.I_q0))
    P_inv, E = linearized_plant(mp, op)
    di_ref = np.array([0.0, 1.0 / (mp.q_const * mp.p * ep.lambda_m_hat)])
    kt = mp.torque_constant

    def solve(w):
        w = np.atleast_1d(np.asarray(w, dtype=np.float64))
        x = _delay_matrix(dp.tau_p, w)
        bm = _delay_matrix(dp.tau_c, w)
        h = H.evaluate(w)
        Ct = law.C_t.evaluate(w)
        cw = np.stack([law.C_omega[0].evaluate(w), law.C_omega[1].evaluate(w)], axis=1)
        M = P_inv.evaluate(w)
        if arch is Architecture.FEEDBACK:
            M = M + (x * bm)[:, None, None] * Ct
        rhs = np.empty((w.size, 2, 2), dtype=np.complex128)
        rhs[:, :, 0] = x[:, None] * (Ct @ di_ref)
        rhs[:, :, 1] = x[:, None] * h[:, None] * cw - E[None, :]
        sol, det = _kernels.solve2x2(M, rhs)
        scale = np.abs(M).reshape(w.size, -1).max(axis=1) ** 2
        bad = ~(np.abs(det) > 1e-300 * np.maximum(scale, 1.0))
        if np.any(bad):
            raise SingularLoopError(float(w[bad][0]))
        return kt * sol[:, 1, 0], kt * sol[:, 1, 1]

    At, Aw = solve(grid.omegas)
    return EmdResponse(
        FrequencyResponse(grid, At, lambda w: solve(w)[0]),
        FrequencyResponse(grid, Aw, lambda w: solve(w)[1]),
        "sampled",
        arch,
    )


def closed_form(architecture, mp, ep, gains, dp, ve, **kw) -> EmdResponse:
    """Dispatch to :func:`ff_closed_form` or :func:`fb_closed_form`."""
    arch = Architecture(architecture)
    if arch is Architecture.FEEDFORWARD:
        return ff_closed_form(mp, ep, dp, ve, **kw)
    return fb_closed_form(mp, ep, gains, dp, ve, **kw)


__all__ = [
    "Architecture",
    "ControllerLaw",
    "EmdResponse",
    "MissingGainsError",
    "PiGains",
    "SHat",
    "SingularLoopError",
    "block_compose_frf",
    "closed_form",
    "controller_laws",
    "fb_closed_form",
    "ff_closed_form",
    "ideal_emd",
]
