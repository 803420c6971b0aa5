"""Config-driven assembly of the analysis objects used by the CLI."""
from __future__ import annotations

import enum
from typing import Optional

import numpy as np

from .closed_loop import (
    Eoltf,
    eoltf,
    loop_transfer,
    open_loop_rhp_poles,
    steering_margins,
    torque_scaling,
    torque_scaling_ratio,
    torque_scaling_ratio_tf,
)
from .config import SystemConfig
from .emd import Architecture, EmdResponse, block_compose_frf, closed_form, ideal_emd
from .mech import TwoMassModel, two_mass
from .tf_core import DelayRational, FrequencyGrid, FrequencyResponse, MarginReport, sample

DEFAULT_PADE_ORDER = 4


class Subject(str, enum.Enum):
    A_T = "A_t"
    A_OMEGA = "A_omega"
    Z_T = "Z_t"
    Z_R = "Z_r"
    Z_D = "Z_d"
    W_T = "W_t"
    W_R = "W_r"
    W_D = "W_d"
    RATIO = "ratio"


def mechanics(cfg: SystemConfig, variant=None) -> TwoMassModel:
    return two_mass(cfg.mechanical, variant if variant is not None else cfg.mech_variant)


def drive(
    cfg: SystemConfig,
    architecture,
    grid: Optional[FrequencyGrid] = None,
    pade_order: Optional[int] = None,
) -> EmdResponse:
    """Drive dynamics: closed forms at rest, the dq block composition otherwise."""
    arch = Architecture(architecture)
    cfg.require(arch)
    if cfg.at_rest:
        return closed_form(
            arch, cfg.motor, cfg.estimates, cfg.pi_gains, cfg.delays, cfg.velocity_estimator,
            s_hat=cfg.s_hat, grid=grid, pade_order=pade_order,
        )
    if pade_order is not None:
        raise ValueError("rationalized drive responses exist only at a zero operating point")
    return block_compose_frf(
        arch, cfg.motor, cfg.estimates, cfg.pi_gains, cfg.delays, cfg.velocity_estimator,
        cfg.operating_point, grid if grid is not None else cfg.grid.build(), s_hat=cfg.s_hat,
    )


def response(cfg: SystemConfig, subject, architecture, grid: FrequencyGrid) -> FrequencyResponse:
    """Sampled response of one subject on ``grid`` (exact delays)."""
    subject = Subject(subject)
    emd = drive(cfg, architecture, grid)
    if subject is Subject.A_T:
        return sample(emd.A_t, grid)
    if subject is Subject.A_OMEGA:
        return sample(emd.A_omega, grid)
    mech = mechanics(cfg)
    if subject in (Subject.Z_T, Subject.Z_R, Subject.Z_D):
        e = eoltf(mech, emd, grid)
        return sample({"Z_t": e.Z_t, "Z_r": e.Z_r, "Z_d": e.Z_d}[subject.value], grid)
    ts = torque_scaling(mech, emd, grid)
    if subject is Subject.RATIO:
        return torque_scaling_ratio(ts, emd, grid)
    return sample({"W_t": ts.W_t, "W_r": ts.W_r, "W_d": ts.W_d}[subject.value], grid)


def rational_subject(cfg: SystemConfig, subject, architecture, pade_order: int) -> DelayRational:
    """Pade-rationalized transfer function of a subject (zero operating point only)."""
    subject = Subject(subject)
    emd = drive(cfg, architecture, pade_order=pade_order)
    if subject is Subject.A_T:
        return emd.A_t
    if subject is Subject.A_OMEGA:
        return emd.A_omega
    mech = mechanics(cfg)
    if subject in (Subject.Z_T, Subject.Z_R, Subject.Z_D):
        e = eoltf(mech, emd)
        return {"Z_t": e.Z_t, "Z_r": e.Z_r, "Z_d": e.Z_d}[subject.value]
    if subject is Subject.RATIO:
        return torque_scaling_ratio_tf(mech, emd)
    ts = torque_scaling(mech, emd)
    return {"W_t": ts.W_t, "W_r": ts.W_r, "W_d": ts.W_d}[subject.value]


def effective_loop(cfg: SystemConfig, architecture, grid: FrequencyGrid) -> Eoltf:
    return eoltf(mechanics(cfg), drive(cfg, architecture, grid), grid)


def margins(cfg: SystemConfig, architecture, grid: FrequencyGrid):
    """``(report, loop response, open-loop RHP pole count or None)`` for one architecture.

    The unstable open-loop pole count comes from the Pade-rationalized loop
    and is ``None`` away from the zero operating point.
    """
    cfg.require_assist()
    e = effective_loop(cfg, architecture, grid)
    report = steering_margins(e, cfg.assist, grid)
    loop = loop_transfer(e, cfg.assist, grid)
    rhp = None
    if cfg.at_rest:
        order = cfg.pade_order or DEFAULT_PADE_ORDER
        e_sym = eoltf(mechanics(cfg), drive(cfg, architecture, pade_order=order))
        rhp = open_loop_rhp_poles(e_sym, cfg.assist)
    return report, loop, rhp


def ideal_margins(cfg: SystemConfig, grid: FrequencyGrid) -> MarginReport:
    """Margins with an electrically transparent drive (bare mechanics)."""
    cfg.require_assist()
    return steering_margins(eoltf(mechanics(cfg), ideal_emd(), grid), cfg.assist, grid)


def bode_columns(fr: FrequencyResponse) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return fr.omegas, fr.magnitude_db(), fr.phase_deg(unwrap=True)


__all__ = [
    "DEFAULT_PADE_ORDER",
    "Subject",
    "bode_columns",
    "drive",
    "effective_loop",
    "ideal_margins",
    "margins",
    "mechanics",
    "rational_subject",
    "response",
]
