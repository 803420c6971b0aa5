"""Mechanics plus drive dynamics: effective open loop and loaded torque response.

Substituting ``T_m = A_t T_m* + A_omega omega_m`` (with ``omega_m = s th_m``)
into the two-mass equations gives

    Delta = D - N s A_omega Q_h
    Z_t = N K_h (K_h - Q_h) A_t / Delta      W_t = D A_t / Delta
    Z_r =   K_h (K_h - Q_h)     / Delta      W_r = s A_omega Q_h / Delta
    Z_d = K_h (Q_m - K_h - N s A_omega) / Delta
                                             W_d = K_h s A_omega / Delta

where ``Q_h, Q_m`` are the diagonal entries of the two-mass system matrix
(see :mod:`epsdyn.mech`). For ``N = 1`` and the paper-verbatim mechanics
these reduce to the literal forms with ``Q = M``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels
from .emd import Architecture, EmdResponse
from .mech import Provenance, TwoMassModel
from .params import ParameterError, check_finite
from .tf_core import (
    DelayRational,
    FrequencyGrid,
    FrequencyResponse,
    GridMismatchError,
    MarginReport,
    Polynomial,
    nyquist_rhp_count,
    stability_margins,
)
from .tf_core.delay_rational import STABILITY_TOL
from .tf_core.frequency import MIN_POINTS_PER_DECADE, evaluator_of

Dynamic = Union[DelayRational, FrequencyResponse]


@dataclass(frozen=True, eq=False)
class Eoltf:
    """Channels from motor torque command, rack force and driver torque to sensed torque."""

    Z_t: Dynamic
    Z_r: Dynamic
    Z_d: Dynamic
    architecture: Optional[Architecture] = None
    provenance: Optional[Provenance] = None

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.Z_t, DelayRational)


@dataclass(frozen=True, eq=False)
class TorqueScaling:
    """Motor torque with the mechanics attached, per input channel."""

    W_t: Dynamic
    W_r: Dynamic
    W_d: Dynamic
    architecture: Optional[Architecture] = None
    provenance: Optional[Provenance] = None

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.W_t, DelayRational)


@dataclass(frozen=True, eq=False)
class AssistLaw:
    """Static assist gain plus optional compensator closing the steering loop.

    The loop transfer used for margins is ``gain * compensator * Z_t`` under the
    usual negative-feedback convention, i.e. ``T_m* = -gain * C * T_h``.
    """

    gain: float
    compensator: DelayRational = field(default_factory=lambda: DelayRational.gain(1.0))

    def __post_init__(self):
        errs = check_finite("assist.gain", self.gain)
        if errs:
            raise ParameterError(errs)


def _symbolic_ok(emd: EmdResponse) -> bool:
    return (
        emd.is_symbolic
        and isinstance(emd.A_omega, DelayRational)
        and emd.A_omega.is_rational
    )


def _resolve_grid(emd: EmdResponse, grid: Optional[FrequencyGrid]) -> FrequencyGrid:
    if emd.grid is not None:
        if grid is not None and grid != emd.grid:
            raise GridMismatchError("requested grid differs from the drive response grid")
        return emd.grid
    return grid if grid is not None else FrequencyGrid.default()


def _symbolic_parts(mech: TwoMassModel, emd: EmdResponse):
    A_t, A_w = emd.A_t, emd.A_omega
    Ns = Polynomial([0.0, mech.N])
    delta = mech.D * A_w.den - Ns * mech.Q_h * A_w.num
    return A_t, A_w, Ns, delta


def _sampled_solve(mech: TwoMassModel, emd: EmdResponse):
    """Per-frequency evaluator returning (Z_t, Z_r, Z_d, W_t, W_r, W_d)."""
    at_ev = evaluator_of(emd.A_t)
    aw_ev = evaluator_of(emd.A_omega)
    N, K_h = mech.N, mech.K_h

    if mech.provenance is Provenance.PAPER:
        tm, tr, td = mech.raw_numerators()

        def channels(w):
            w = np.atleast_1d(np.asarray(w, dtype=np.float64))
            s = 1j * w
            at, aw = at_ev(w), aw_ev(w)
            qh, d = mech.Q_h(s), mech.D(s)
            delta = d - N * s * aw * qh
            return (
                tm(s) * at / delta,
                tr(s) / delta,
                (td(s) - K_h * N * s * aw) / delta,
                d * at / delta,
                s * aw * qh / delta,
                K_h * s * aw / delta,
            )
        return channels

    def channels(w):
        w = np.atleast_1d(np.asarray(w, dtype=np.float64))
        s = 1j * w
        at, aw = at_ev(w), aw_ev(w)
        m = mech.system_matrix(w)
        m[:, 1, 1] -= N * s * aw
        rhs = np.zeros((w.size, 2, 3), dtype=np.complex128)
        rhs[:, 1, 0] = N * at
        rhs[:, 1, 1] = 1.0
        rhs[:, 0, 2] = 1.0
        theta, _ = _kernels.solve2x2(m, rhs)
        z = K_h * (theta[:, 0, :] - theta[:, 1, :])
        wm = s[:, None] * theta[:, 1, :] * aw[:, None]
        return z[:, 0], z[:, 1], z[:, 2], at + wm[:, 0], wm[:, 1], wm[:, 2]
    return channels


def _sampled(channels, grid, idx):
    ev = lambda w: channels(w)[idx]  # noqa: E731
    return FrequencyResponse(grid, channels(grid.omegas)[idx], ev)


def eoltf(mech: TwoMassModel, emd: EmdResponse, grid: Optional[FrequencyGrid] = None) -> Eoltf:
    """Effective open-loop channels with the drive dynamics embedded.

    Symbolic when the drive response is symbolic and ``A_omega`` is rational;
    otherwise sampled on ``grid`` (or on the drive response's own grid).
    """
    if _symbolic_ok(emd) and grid is None:
        A_t, A_w, Ns, delta = _symbolic_parts(mech, emd)
        tm, tr, td = mech.raw_numerators()
        return Eoltf(
            Z_t=DelayRational(tm * A_t.num * A_w.den, A_t.den * delta, A_t.delay),
            Z_r=DelayRational(tr * A_w.den, delta),
            Z_d=DelayRational(td * A_w.den - Ns * A_w.num * mech.K_h, delta),
            architecture=emd.architecture,
            provenance=mech.provenance,
        )
    grid = _resolve_grid(emd, grid)
    ch = _sampled_solve(mech, emd)
    return Eoltf(
        _sampled(ch, grid, 0), _sampled(ch, grid, 1), _sampled(ch, grid, 2),
        architecture=emd.architecture, provenance=mech.provenance,
    )


def torque_scaling(
    mech: TwoMassModel, emd: EmdResponse, grid: Optional[FrequencyGrid] = None
) -> TorqueScaling:
    """Motor torque response including the mechanical load."""
    if _symbolic_ok(emd) and grid is None:
        A_t, A_w, Ns, delta = _symbolic_parts(mech, emd)
        s = Polynomial([0.0, 1.0])
        return TorqueScaling(
            W_t=DelayRational(mech.D * A_t.num * A_w.den, A_t.den * delta, A_t.delay),
            W_r=DelayRational(s * A_w.num * mech.Q_h, delta),
            W_d=DelayRational(s * A_w.num * mech.K_h, delta),
            architecture=emd.architecture,
            provenance=mech.provenance,
        )
    grid = _resolve_grid(emd, grid)
    ch = _sampled_solve(mech, emd)
    return TorqueScaling(
        _sampled(ch, grid, 3), _sampled(ch, grid, 4), _sampled(ch, grid, 5),
        architecture=emd.architecture, provenance=mech.provenance,
    )


def torque_scaling_ratio(ts: TorqueScaling, emd: EmdResponse, grid: FrequencyGrid) -> FrequencyResponse:
    """Pointwise ``W_t / A_t``: how the mechanics reshape the drive's torque tracking."""
    wt = evaluator_of(ts.W_t)
    at = evaluator_of(emd.A_t)

    def ratio(w):
        a = at(w)
        zero = a == 0
        if np.any(zero):
            raise ZeroDivisionError(
                f"A_t vanishes at omega = {np.atleast_1d(w)[zero][0]!r} rad/s"
            )
        return wt(w) / a

    return FrequencyResponse.from_function(ratio, grid)


def torque_scaling_ratio_tf(mech: TwoMassModel, emd: EmdResponse) -> DelayRational:
    """Symbolic ``W_t / A_t = D / Delta``, built without dividing by ``A_t``.

    Dividing would turn zeros of ``A_t`` (including the right-half-plane
    zeros of a Pade delay model) into spurious poles.
    """
    if not _symbolic_ok(emd):
        raise ValueError("symbolic torque-scaling ratio needs a rational A_omega")
    _, A_w, _, delta = _symbolic_parts(mech, emd)
    return DelayRational(mech.D * A_w.den, delta)


def loop_transfer(e: Eoltf, assist: AssistLaw, grid: FrequencyGrid) -> FrequencyResponse:
    """``gain * compensator * Z_t`` sampled on ``grid`` with an exact evaluator."""
    z = evaluator_of(e.Z_t)
    comp = assist.compensator
    gain = float(assist.gain)
    return FrequencyResponse.from_function(lambda w: gain * comp.evaluate(w) * z(w), grid)


def steering_margins(e: Eoltf, assist: AssistLaw, grid: FrequencyGrid) -> MarginReport:
    """Margins of the closed steering loop; the report is tagged with the architecture."""
    if grid.min_points_per_decade() < MIN_POINTS_PER_DECADE:
        raise ValueError(f"steering margins need >= {MIN_POINTS_PER_DECADE} points per decade")
    report = stability_margins(loop_transfer(e, assist, grid))
    label = e.architecture.value if e.architecture is not None else "ideal"
    return MarginReport(
        report.gain_margin_db,
        report.phase_margin_deg,
        report.gain_crossover_rad_s,
        report.phase_crossover_rad_s,
        report.all_crossovers,
        label,
    )


def loop_unstable(
    report: MarginReport,
    loop: Optional[FrequencyResponse] = None,
    open_loop_rhp: int = 0,
) -> bool:
    """Grid heuristic for closed-loop instability.

    With the sampled loop available, the Nyquist count decides. Otherwise (or
    when the count is inconclusive) a negative worst-case gain or phase
    margin flags instability.
    """
    if loop is not None:
        z = nyquist_rhp_count(loop, open_loop_rhp)
        if z is not None:
            return z > 0
    if report.gain_margin_db < 0.0:
        return True
    return report.phase_margin_deg is not None and report.phase_margin_deg < 0.0


def open_loop_rhp_poles(e: Eoltf, assist: AssistLaw) -> int:
    """Unstable poles of ``compensator * Z_t`` (delays dropped; they add none)."""
    count = 0
    for tf in (e.Z_t, assist.compensator):
        if isinstance(tf, DelayRational) and tf.den.degree > 0:
            count += int(np.sum(tf.den.roots().real > STABILITY_TOL))
    return count


def handwheel_from_scaling(mech: TwoMassModel, ts: TorqueScaling, omegas) -> tuple:
    """Sensed-torque channels rebuilt from the bare mechanics and the loaded motor torque.

    ``T_h = G_m T_m + G_r T_r + G_d T_d`` with ``T_m = W_t T* + W_r T_r + W_d T_d``.
    """
    w = np.atleast_1d(np.asarray(omegas, dtype=np.float64))
    gm, gr, gd = (c.evaluate(w) for c in mech.channels())
    wt, wr, wd = (evaluator_of(x)(w) for x in (ts.W_t, ts.W_r, ts.W_d))
    return gm * wt, gm * wr + gr, gm * wd + gd


__all__ = [
    "AssistLaw",
    "Eoltf",
    "TorqueScaling",
    "eoltf",
    "handwheel_from_scaling",
    "loop_transfer",
    "loop_unstable",
    "open_loop_rhp_poles",
    "steering_margins",
    "torque_scaling",
    "torque_scaling_ratio",
    "torque_scaling_ratio_tf",
]
