"""Shared fixtures and randomized parameter generators.

Randomized ranges are testing infrastructure, chosen to cover plausible EPS
hardware rather than to reproduce any particular machine:

    motor      L_d, L_q in [10 uH, 10 mH] (log-uniform), R in [5 mOhm, 1 Ohm],
               lambda_m in [5 mV*s, 0.1 V*s], p in {3, 4, 5, 6}
    estimates  each within +-30 % of the true value
    delays     tau_c, tau_p in [0, 500 us]
    velocity   tau_omega in [0, 5 ms], physical or paper variant
    PI         K_p in [0.01, 5] V/A, K_i in [1, 5000] V/(A*s)
    mechanics  J_h in [0.01, 0.1], J_m in [0.02, 0.5] kg*m^2, b in [0.05, 5],
               K_h in [50, 300], K_l in [100, 2000] N*m/rad, N in [5, 30]
"""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from epsdyn.config import load_config, sample_config_path
from epsdyn.emd import PiGains
from epsdyn.mech import MechanicalParams
from epsdyn.motor import (
    DelayParams,
    EstimatedParams,
    MotorParams,
    VelocityEstimator,
    VelocityVariant,
)
from epsdyn.tf_core import FrequencyGrid


def log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_motor(rng) -> MotorParams:
    return MotorParams(
        p=int(rng.integers(3, 7)),
        lambda_m=log_uniform(rng, 5e-3, 0.1),
        L_d=log_uniform(rng, 10e-6, 10e-3),
        L_q=log_uniform(rng, 10e-6, 10e-3),
        R=log_uniform(rng, 5e-3, 1.0),
    )


def random_estimates(rng, mp: MotorParams, spread=0.3) -> EstimatedParams:
    f = lambda: float(rng.uniform(1 - spread, 1 + spread))  # noqa: E731
    return EstimatedParams(mp.lambda_m * f(), mp.L_d * f(), mp.L_q * f(), mp.R * f())


def random_delays(rng, zero=False) -> DelayParams:
    if zero:
        return DelayParams()
    return DelayParams(float(rng.uniform(0, 500e-6)), float(rng.uniform(0, 500e-6)))


def random_velocity(rng) -> VelocityEstimator:
    variant = VelocityVariant.PHYSICAL if rng.random() < 0.7 else VelocityVariant.PAPER
    return VelocityEstimator(float(rng.uniform(0, 5e-3)), variant)


def random_gains(rng) -> PiGains:
    return PiGains(
        log_uniform(rng, 0.01, 5.0), log_uniform(rng, 1.0, 5000.0),
        log_uniform(rng, 0.01, 5.0), log_uniform(rng, 1.0, 5000.0),
    )


def random_mech(rng) -> MechanicalParams:
    return MechanicalParams(
        J_h=log_uniform(rng, 0.01, 0.1),
        b_h=log_uniform(rng, 0.05, 5.0),
        J_m=log_uniform(rng, 0.02, 0.5),
        b_m=log_uniform(rng, 0.05, 5.0),
        K_h=log_uniform(rng, 50.0, 300.0),
        K_l=log_uniform(rng, 100.0, 2000.0),
        N=float(rng.uniform(5.0, 30.0)),
    )


def rel_err(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


# hypothesis strategies over the same ranges
def _log(lo, hi):
    return st.floats(np.log(lo), np.log(hi)).map(lambda x: float(np.exp(x)))


motor_params = st.builds(
    MotorParams,
    p=st.integers(3, 6),
    lambda_m=_log(5e-3, 0.1),
    L_d=_log(10e-6, 10e-3),
    L_q=_log(10e-6, 10e-3),
    R=_log(5e-3, 1.0),
)

mech_params = st.builds(
    MechanicalParams,
    J_h=_log(0.01, 0.1),
    b_h=_log(0.05, 5.0),
    J_m=_log(0.02, 0.5),
    b_m=_log(0.05, 5.0),
    K_h=_log(50.0, 300.0),
    K_l=_log(100.0, 2000.0),
    N=st.floats(5.0, 30.0),
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sample_cfg():
    return load_config(sample_config_path())


@pytest.fixture(scope="session")
def default_grid():
    return FrequencyGrid.default()


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
