"""Two-mass steering mechanics: handwheel and assist mass joined by the torsion bar.

Two builds of the same three-input model are provided:

``paper-verbatim``
    literal channels ``T_h = N K_h (K_h - M_h)/D T_m + ...`` with
    ``D = M_h M_m - K_h^2``.
``first-principles``
    derived from Newton's law with the torsion-bar spring acting on both
    inertias, which gives the denominator ``(M_h + K_h)(M_m + K_h) - K_h^2``.

Both are instances of one template. The two inertias obey
``[[Q_h, -K_h], [-K_h, Q_m]] [th_h, th_m] = [T_d, N T_m + T_r]`` with sensed
torque ``T_h = K_h (th_h - th_m)``; the builds differ only in the diagonal
entries ``Q_h, Q_m`` (``M_h, M_m`` versus ``M_h + K_h, M_m + K_h``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields

import numpy as np

from . import _kernels
from .params import ParameterError, check_positive, check_nonnegative
from .tf_core import DelayRational, Polynomial


class Provenance(str, enum.Enum):
    PAPER = "paper-verbatim"
    FIRST_PRINCIPLES = "first-principles"


@dataclass(frozen=True)
class MechanicalParams:
    """Column-side two-mass parameters (SI units)."""

    J_h: float
    b_h: float
    J_m: float
    b_m: float
    K_h: float
    K_l: float
    N: float

    def __post_init__(self):
        errors = self.violations(**{f.name: getattr(self, f.name) for f in fields(self)})
        if errors:
            raise ParameterError(errors)

    @staticmethod
    def violations(J_h, b_h, J_m, b_m, K_h, K_l, N) -> list[str]:
        errs = []
        errs += check_positive("J_h", J_h)
        errs += check_nonnegative("b_h", b_h)
        errs += check_positive("J_m", J_m)
        errs += check_nonnegative("b_m", b_m)
        errs += check_positive("K_h", K_h)
        errs += check_positive("K_l", K_l)
        errs += check_positive("N", N)
        return errs


def impedances(p: MechanicalParams) -> tuple[Polynomial, Polynomial, Polynomial]:
    """``M_h = J_h s^2 + b_h s``, ``M_m = J_m s^2 + b_m s + K_l``, ``D = M_h M_m - K_h^2``."""
    M_h = Polynomial([0.0, p.b_h, p.J_h])
    M_m = Polynomial([p.K_l, p.b_m, p.J_m])
    D = M_h * M_m - p.K_h ** 2
    return M_h, M_m, D


@dataclass(frozen=True, eq=False)
class TwoMassModel:
    """Motor torque, rack force and driver torque to sensed handwheel torque."""

    to_Th_from_Tm: DelayRational
    to_Th_from_Tr: DelayRational
    to_Th_from_Td: DelayRational
    M_h: Polynomial
    M_m: Polynomial
    D: Polynomial
    provenance: Provenance
    params: MechanicalParams
    Q_h: Polynomial
    Q_m: Polynomial

    @property
    def K_h(self) -> float:
        return self.params.K_h

    @property
    def N(self) -> float:
        return self.params.N

    def raw_numerators(self) -> tuple[Polynomial, Polynomial, Polynomial]:
        """Un-normalized channel numerators over the shared denominator ``D``."""
        return channel_numerators(self.Q_h, self.Q_m, self.K_h, self.N)

    def system_matrix(self, omegas) -> np.ndarray:
        """``[[Q_h, -K_h], [-K_h, Q_m]]`` at ``s = j omega``, shape (n, 2, 2)."""
        s = 1j * np.atleast_1d(np.asarray(omegas, dtype=np.float64))
        m = np.empty((s.size, 2, 2), dtype=np.complex128)
        m[:, 0, 0] = self.Q_h(s)
        m[:, 0, 1] = -self.K_h
        m[:, 1, 0] = -self.K_h
        m[:, 1, 1] = self.Q_m(s)
        return m

    def channels(self) -> tuple[DelayRational, DelayRational, DelayRational]:
        return self.to_Th_from_Tm, self.to_Th_from_Tr, self.to_Th_from_Td


def channel_numerators(Q_h: Polynomial, Q_m: Polynomial, K_h: float, N: float):
    tr = (K_h - Q_h) * K_h
    tm = tr * N
    td = (Q_m - K_h) * K_h
    return tm, tr, td


def _build(p: MechanicalParams, Q_h: Polynomial, Q_m: Polynomial, provenance: Provenance):
    M_h, M_m, _ = impedances(p)
    D = Q_h * Q_m - p.K_h ** 2
    tm, tr, td = channel_numerators(Q_h, Q_m, p.K_h, p.N)
    return TwoMassModel(
        to_Th_from_Tm=DelayRational(tm, D),
        to_Th_from_Tr=DelayRational(tr, D),
        to_Th_from_Td=DelayRational(td, D),
        M_h=M_h,
        M_m=M_m,
        D=D,
        provenance=provenance,
        params=p,
        Q_h=Q_h,
        Q_m=Q_m,
    )


def two_mass_paper(p: MechanicalParams) -> TwoMassModel:
    """Literal channels with ``Q = M`` on the diagonal."""
    M_h, M_m, _ = impedances(p)
    return _build(p, M_h, M_m, Provenance.PAPER)


def two_mass_first_principles(p: MechanicalParams) -> TwoMassModel:
    """Channels from Newton's law for two inertias coupled by the torsion bar.

        J_h th_h'' + b_h th_h' = T_d - K_h (th_h - th_m)
        J_m th_m'' + b_m th_m' + K_l th_m = N T_m + T_r + K_h (th_h - th_m)
        T_h = K_h (th_h - th_m)

    Eliminating the angles gives ``T_h = K_h (M_m T_d - M_h (N T_m + T_r)) / D'``.
    """
    M_h, M_m, _ = impedances(p)
    return _build(p, M_h + p.K_h, M_m + p.K_h, Provenance.FIRST_PRINCIPLES)


def two_mass(p: MechanicalParams, provenance=Provenance.FIRST_PRINCIPLES) -> TwoMassModel:
    provenance = Provenance(provenance)
    if provenance is Provenance.PAPER:
        return two_mass_paper(p)
    return two_mass_first_principles(p)


def solve_handwheel_torque(model: TwoMassModel, omegas, T_m, T_r, T_d) -> np.ndarray:
    """Sensed torque from a direct per-frequency solve of the two mass equations.

    Inputs may be scalars or arrays broadcastable to ``omegas``.
    """
    w = np.atleast_1d(np.asarray(omegas, dtype=np.float64))
    m = model.system_matrix(w)
    rhs = np.empty((w.size, 2, 1), dtype=np.complex128)
    rhs[:, 0, 0] = np.broadcast_to(T_d, w.shape)
    rhs[:, 1, 0] = model.N * np.broadcast_to(T_m, w.shape) + np.broadcast_to(T_r, w.shape)
    theta, _ = _kernels.solve2x2(m, rhs)
    return model.K_h * (theta[:, 0, 0] - theta[:, 1, 0])


def resonances(model: TwoMassModel) -> np.ndarray:
    """Undamped-ish resonance frequencies (rad/s): |Im| of the upper-half-plane poles."""
    roots = model.D.roots()
    return np.sort(np.abs(roots[roots.imag > 0].imag))


__all__ = [
    "MechanicalParams",
    "ParameterError",
    "Provenance",
    "TwoMassModel",
    "impedances",
    "resonances",
    "solve_handwheel_torque",
    "two_mass",
    "two_mass_first_principles",
    "two_mass_paper",
]
