"""Gain and phase margins from sampled loop responses."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .frequency import MIN_POINTS_PER_DECADE, FrequencyResponse

UNDEFINED = "undefined"


@dataclass(frozen=True)
class Crossover:
    """One crossing of the loop response.

    ``kind == "gain"``: ``|L| = 1`` and ``margin`` is the phase margin in degrees.
    ``kind == "phase"``: phase ``= -180 + 360 k`` and ``margin`` is the gain margin in dB.
    """

    kind: str
    omega: float
    margin: float


@dataclass(frozen=True)
class MarginReport:
    """Worst-case margins plus every crossing found on the grid.

    The headline gain margin is the smallest (signed) one. The headline phase
    margin is the crossing closest to -180 deg, i.e. the smallest ``|margin|``
    with its sign kept; a negative value means the crossing lies on the lead
    side, which is common for loops with a zero at DC. ``phase_margin_deg`` is
    ``None`` when the loop never crosses unity gain; ``gain_margin_db`` is
    ``+inf`` when the phase never reaches ``-180 + 360 k``.
    """

    gain_margin_db: float
    phase_margin_deg: Optional[float]
    gain_crossover_rad_s: Optional[float]
    phase_crossover_rad_s: Optional[float]
    all_crossovers: tuple = field(default_factory=tuple)
    label: str = ""

    @property
    def phase_margin_defined(self) -> bool:
        return self.phase_margin_deg is not None

    def as_key_values(self) -> dict:
        def fmt(x):
            if x is None:
                return UNDEFINED
            if isinstance(x, float) and math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return f"{x:.17g}"

        out = {}
        if self.label:
            out["architecture"] = self.label
        out["gain_margin_db"] = fmt(self.gain_margin_db)
        out["phase_margin_deg"] = fmt(self.phase_margin_deg)
        out["gain_crossover_rad_s"] = fmt(self.gain_crossover_rad_s)
        out["phase_crossover_rad_s"] = fmt(self.phase_crossover_rad_s)
        out["n_gain_crossovers"] = str(sum(c.kind == "gain" for c in self.all_crossovers))
        out["n_phase_crossovers"] = str(sum(c.kind == "phase" for c in self.all_crossovers))
        return out


def _wrap180(deg: float) -> float:
    return (deg + 180.0) % 360.0 - 180.0


def _bracket_root(func, a, b, fallback):
    try:
        fa, fb = func(a), func(b)
    except (ArithmeticError, ValueError):
        return fallback
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
        return fallback
    if fa == 0:
        return a
    if fb == 0:
        return b
    return brentq(func, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def stability_margins(fr: FrequencyResponse, evaluator=None) -> MarginReport:
    """Gain/phase margins of the loop transfer sampled in ``fr``.

    Crossings are located on the grid, then refined: by root bracketing on
    the exact evaluator when one is available (argument or ``fr.evaluator``),
    otherwise by linear interpolation in log-frequency.
    """
    grid = fr.grid
    if grid.decades < 2.0:
        raise ValueError("margin analysis needs a grid spanning at least two decades")
    if grid.min_points_per_decade() < MIN_POINTS_PER_DECADE:
        raise ValueError(
            f"margin analysis needs >= {MIN_POINTS_PER_DECADE} points per decade"
        )
    ev = evaluator if evaluator is not None else fr.evaluator

    lw = np.log10(grid.omegas)
    with np.errstate(divide="ignore"):
        lm = np.log10(np.abs(fr.values))
    ph = np.degrees(np.unwrap(np.angle(fr.values)))

    def phase_near(x, reference):
        p = math.degrees(np.angle(ev(np.array([10.0 ** x]))[0]))
        return p + 360.0 * round((reference - p) / 360.0)

    def interp_phase(x):
        return float(np.interp(x, lw, ph))

    crossings: list[Crossover] = []

    # Unity-gain crossings.
    n = lw.size
    for i in range(n - 1):
        a, b = lm[i], lm[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            x = lw[i]
        elif b == 0.0 and i == n - 2:
            x = lw[i + 1]
        elif a * b < 0.0:
            x = lw[i] + a / (a - b) * (lw[i + 1] - lw[i])
            if ev is not None:
                x = _bracket_root(
                    lambda t: math.log10(abs(ev(np.array([10.0 ** t]))[0])), lw[i], lw[i + 1], x
                )
        else:
            continue
        p = interp_phase(x)
        if ev is not None:
            p = phase_near(x, p)
        crossings.append(Crossover("gain", float(10.0 ** x), _wrap180(180.0 + p)))

    # Phase crossings of -180 + 360 k.
    g = (ph + 180.0) / 360.0
    for i in range(n - 1):
        lo, hi = sorted((g[i], g[i + 1]))
        if lo == hi:
            continue
        for k in range(math.floor(lo) + 1, math.floor(hi) + 1):
            level = 360.0 * k - 180.0
            x = lw[i] + (level - ph[i]) / (ph[i + 1] - ph[i]) * (lw[i + 1] - lw[i])
            if ev is not None:
                x = _bracket_root(
                    lambda t: phase_near(t, interp_phase(t)) - level, lw[i], lw[i + 1], x
                )
                mag = abs(ev(np.array([10.0 ** x]))[0])
                gm = -20.0 * math.log10(mag) if mag > 0 else math.inf
            else:
                m = float(np.interp(x, lw, lm))
                gm = -20.0 * m
            crossings.append(Crossover("phase", float(10.0 ** x), gm))

    gains = [c for c in crossings if c.kind == "gain"]
    phases = [c for c in crossings if c.kind == "phase"]
    worst_pm = min(gains, key=lambda c: (abs(c.margin), c.margin)) if gains else None
    worst_gm = min(phases, key=lambda c: c.margin) if phases else None
    return MarginReport(
        gain_margin_db=worst_gm.margin if worst_gm else math.inf,
        phase_margin_deg=worst_pm.margin if worst_pm else None,
        gain_crossover_rad_s=worst_pm.omega if worst_pm else None,
        phase_crossover_rad_s=worst_gm.omega if worst_gm else None,
        all_crossovers=tuple(sorted(crossings, key=lambda c: c.omega)),
    )


def nyquist_rhp_count(
    fr: FrequencyResponse, open_loop_rhp: int = 0, end_tol_deg: float = 5.0
) -> Optional[int]:
    """Closed-loop right-half-plane pole count of ``1/(1 + L)`` from the grid.

    Uses the phase swept by ``1 + L`` over the grid and mirrors it to negative
    frequencies. Valid only when ``1 + L`` is (nearly) real at both grid ends,
    which holds for loops that are finite at DC and vanish at high frequency;
    returns ``None`` otherwise. ``open_loop_rhp`` is the number of unstable
    open-loop poles.
    """
    v = 1.0 + np.asarray(fr.values)
    if not np.all(np.isfinite(v)) or np.any(v == 0):
        return None
    ang = np.unwrap(np.angle(v))
    for a in (ang[0], ang[-1]):
        off = abs(math.degrees(a) - 180.0 * round(math.degrees(a) / 180.0))
        if off > end_tol_deg:
            return None
    swept = (ang[-1] - ang[0]) / math.pi
    return int(open_loop_rhp - round(swept))
