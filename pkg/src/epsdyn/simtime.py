"""Time-domain verification: realization, fixed-step RK4 and sine-dwell FRFs.

The sine dwell is the empirical counterpart of the analytic sweeps: each grid
frequency gets its own simulation, the settle cycles are discarded and the
measured cycles are fitted by least squares to ``a sin + b cos + c``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import matrix_balance

from . import _kernels
from .tf_core import DelayRational, FrequencyGrid, FrequencyResponse, pade_rationalize
from .tf_core.delay_rational import STABILITY_TOL

STEPS_PER_PERIOD = 50
# RK4 stays accurate (and stable) well inside |h * lambda| < 2.78 on the real axis.
POLE_STEP_FACTOR = 0.5


class ImproperError(ValueError):
    """Numerator degree exceeds denominator degree."""


class UnstableSystemError(ValueError):
    """Sine dwell requested on a system with poles in the closed right half plane."""

    def __init__(self, poles):
        self.poles = np.asarray(poles)
        listing = ", ".join(f"{p.real:.6g}{p.imag:+.6g}j" for p in self.poles)
        super().__init__(f"unstable poles: {listing}")


@dataclass(frozen=True, eq=False)
class StateSpace:
    """``x' = A x + B_in u``, ``y = C_out x + D_dir u``."""

    A: np.ndarray
    B_in: np.ndarray
    C_out: np.ndarray
    D_dir: np.ndarray

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.D_dir, dtype=np.float64))
        A = np.asarray(self.A, dtype=np.float64)
        if A.size == 0:
            A = np.zeros((0, 0))
        n = A.shape[0]
        B = np.asarray(self.B_in, dtype=np.float64).reshape(n, D.shape[1])
        C = np.asarray(self.C_out, dtype=np.float64).reshape(D.shape[0], n)
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        for name, arr in (("A", A), ("B_in", B), ("C_out", C), ("D_dir", D)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B_in", B)
        object.__setattr__(self, "C_out", C)
        object.__setattr__(self, "D_dir", D)

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def poles(self) -> np.ndarray:
        if self.order == 0:
            return np.zeros(0, dtype=np.complex128)
        return np.linalg.eigvals(self.A)

    def is_stable(self) -> bool:
        return bool(np.all(self.poles().real < -STABILITY_TOL))

    def frequency_response(self, omegas) -> np.ndarray:
        """``C (j w I - A)^-1 B + D`` for a SISO model, one value per omega."""
        w = np.atleast_1d(np.asarray(omegas, dtype=np.float64))
        d = self.D_dir[0, 0]
        if self.order == 0:
            return np.full(w.shape, d, dtype=np.complex128)
        eye = np.eye(self.order)
        out = np.empty(w.shape, dtype=np.complex128)
        for i, wi in enumerate(w):
            x = np.linalg.solve(1j * wi * eye - self.A, self.B_in[:, 0])
            out[i] = self.C_out[0] @ x + d
        return out

    def balanced(self) -> "StateSpace":
        """Similarity transform by powers of two that equalizes row/column norms of ``A``."""
        if self.order == 0:
            return self
        # Without permutation the returned permutation vector is undefined and
        # scipy's int cast of it may warn; only the scaling is used.
        with np.errstate(invalid="ignore"):
            _, (scale, _) = matrix_balance(self.A, permute=False, separate=True)
        t_inv = 1.0 / scale
        return StateSpace(
            self.A * t_inv[:, None] * scale[None, :],
            self.B_in * t_inv[:, None],
            self.C_out * scale[None, :],
            self.D_dir,
        )


def to_state_space(tf: DelayRational, pade_order: Optional[int] = None) -> StateSpace:
    """Controllable-canonical realization of ``tf`` (delays replaced by Pade first).

    ``pade_order`` is required when ``tf`` carries a delay.
    """
    if tf.delay > 0.0:
        if pade_order is None:
            raise ValueError("transfer function has a delay; give a Pade order")
        tf = pade_rationalize(tf, pade_order)
    num, den = tf.num.coeffs, tf.den.coeffs
    n = tf.den.degree
    if tf.num.degree > n:
        raise ImproperError(
            f"improper transfer function: numerator degree {tf.num.degree} > "
            f"denominator degree {n}"
        )
    lead = den[-1]
    a = den / lead
    b = np.zeros(n + 1)
    b[: num.size] = num / lead
    d = b[n] if n >= 0 else 0.0
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[d]])
    resid = b[:n] - d * a[:n]
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -a[:n]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    return StateSpace(A, B, resid[None, :], [[d]])


Signal = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled SISO simulation record."""

    h: float
    t: np.ndarray
    u: np.ndarray
    y: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def warnings(self) -> list:
        return self.metadata.setdefault("warnings", [])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "u", "y"])
            for row in zip(self.t, self.u, self.y):
                writer.writerow([f"{v:.17g}" for v in row])


def _half_step_input(u: Signal, n_steps: int, h: float) -> np.ndarray:
    if callable(u):
        t_half = np.arange(2 * n_steps + 1) * (h / 2.0)
        return np.asarray(u(t_half), dtype=np.float64).reshape(-1)
    samples = np.asarray(u, dtype=np.float64).reshape(-1)
    if samples.size != n_steps + 1:
        raise ValueError(f"expected {n_steps + 1} input samples, got {samples.size}")
    # Midpoints by linear interpolation of the full-step samples.
    out = np.empty(2 * n_steps + 1)
    out[::2] = samples
    out[1::2] = 0.5 * (samples[:-1] + samples[1:])
    return out


def integrate(
    ss: StateSpace,
    u: Signal,
    h: float,
    n_steps: Optional[int] = None,
    *,
    duration: Optional[float] = None,
    f_max_hz: Optional[float] = None,
    x0=None,
) -> Trajectory:
    """Classical RK4 with fixed step ``h``; outputs at every step.

    ``u`` is either a callable of time (evaluated at half steps) or an array
    of ``n_steps + 1`` samples. ``f_max_hz`` is the highest excitation
    frequency; a step above ``1/(50 f_max)`` is recorded as a warning.
    """
    if not (h > 0.0 and math.isfinite(h)):
        raise ValueError(f"step size must be finite and > 0, got {h!r}")
    if n_steps is None:
        if duration is not None:
            n_steps = int(math.ceil(duration / h - 1e-9))
        elif not callable(u):
            n_steps = np.asarray(u).size - 1
        else:
            raise ValueError("give n_steps or duration for a callable input")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    u_half = _half_step_input(u, n_steps, h)
    meta: dict = {"warnings": [], "backend": _kernels.BACKEND}
    if f_max_hz is not None and f_max_hz > 0 and h > 1.0 / (STEPS_PER_PERIOD * f_max_hz):
        meta["warnings"].append(
            f"step {h:.6g} s exceeds 1/({STEPS_PER_PERIOD} f_max) = "
            f"{1.0 / (STEPS_PER_PERIOD * f_max_hz):.6g} s"
        )
    y = _kernels.rk4_lti(ss.A, ss.B_in, ss.C_out, ss.D_dir, u_half, h, x0)
    t = np.arange(n_steps + 1) * h
    return Trajectory(h, t, u_half[::2].copy(), y[:, 0].copy(), meta)


def dwell_step(ss: StateSpace, omega: float, step_scale: float = 1.0) -> float:
    """Step size for a dwell at ``omega``: 50 steps per period, bounded by the fastest pole.

    ``step_scale`` multiplies the result (0.5 halves the step).
    """
    h = 2.0 * math.pi / (STEPS_PER_PERIOD * omega)
    poles = ss.poles()
    if poles.size:
        h = min(h, POLE_STEP_FACTOR / float(np.max(np.abs(poles))))
    return h * step_scale


def _dwell_one(ss: StateSpace, omega: float, cycles_settle: int, cycles_measure: int,
               step_scale: float = 1.0) -> complex:
    period = 2.0 * math.pi / omega
    h = dwell_step(ss, omega, step_scale)
    steps_per_cycle = int(math.ceil(period / h))
    h = period / steps_per_cycle
    n_steps = steps_per_cycle * (cycles_settle + cycles_measure)
    traj = integrate(ss, lambda t: np.sin(omega * t), h, n_steps)
    start = steps_per_cycle * cycles_settle
    t = traj.t[start:]
    y = traj.y[start:]
    if not np.all(np.isfinite(y)):
        return complex(np.nan, np.nan)
    # Growing envelope: the last measured cycle dwarfs the first one.
    first = np.max(np.abs(y[:steps_per_cycle]))
    last = np.max(np.abs(y[-steps_per_cycle:]))
    if first > 0 and last > 1.5 * first and cycles_measure > 1:
        return complex(np.nan, np.nan)
    basis = np.column_stack([np.sin(omega * t), np.cos(omega * t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return complex(coef[0], coef[1])


def sine_dwell_frf(
    ss: StateSpace,
    grid: FrequencyGrid,
    cycles_settle: int = 10,
    cycles_measure: int = 5,
    *,
    workers: Optional[int] = None,
    balance: bool = True,
    step_scale: float = 1.0,
) -> FrequencyResponse:
    """Empirical FRF of ``ss``: one unit-amplitude sine dwell per grid frequency.

    Frequencies whose response grows during the measurement window come back
    as ``nan``. ``step_scale`` shrinks or grows the default step (see
    :func:`dwell_step`). ``workers > 1`` runs the dwells on a thread pool (the compiled
    integrator releases the GIL).
    """
    if not step_scale > 0.0:
        raise ValueError(f"step_scale must be > 0, got {step_scale!r}")
    if cycles_settle < 0 or cycles_measure < 1:
        raise ValueError("need cycles_settle >= 0 and cycles_measure >= 1")
    if not ss.is_stable():
        unstable = ss.poles()
        raise UnstableSystemError(unstable[unstable.real >= -STABILITY_TOL])
    model = ss.balanced() if balance else ss
    omegas = grid.omegas
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(
                lambda w: _dwell_one(model, w, cycles_settle, cycles_measure, step_scale), omegas
            ))
    else:
        values = [_dwell_one(model, w, cycles_settle, cycles_measure, step_scale) for w in omegas]
    return FrequencyResponse(grid, np.array(values, dtype=np.complex128))


__all__ = [
    "ImproperError",
    "StateSpace",
    "Trajectory",
    "UnstableSystemError",
    "dwell_step",
    "integrate",
    "sine_dwell_frf",
    "to_state_space",
]
