"""TOML system configuration.

Keys follow the model symbols in lower case (``j_h``, ``k_h``, ``lambda_m``,
``l_q``, ``tau_c``, ``k_iq`` ...). Every violation in a file is collected and
reported together; parse errors carry the line and column.

Sections and defaults (``required`` marks keys with no default)::

    [mechanical]          j_h, b_h, j_m, b_m, k_h, k_l, n (required);
                          variant = "first-principles" | "paper-verbatim"
    [motor]               p, lambda_m, l_d, l_q, r (required)
    [estimates]           lambda_m_hat, l_d_hat, l_q_hat, r_hat (default: true values)
    [delays]              tau_c = 0, tau_p = 0
    [velocity_estimator]  tau_omega = 0, variant = "physical" | "paper"
    [pi_gains]            k_pd, k_id, k_pq, k_iq (section optional; needed for feedback)
    [s_hat]               tau_d = 0
    [assist]              gain (required if the section is present);
                          compensator_num = [1.0], compensator_den = [1.0] (ascending powers)
    [grid]                w_min = 0.1, w_max = 1e4, points_per_decade = 80
    [operating_point]     i_d0 = 0, i_q0 = 0, omega_m0 = 0
    [analysis]            pade_order (optional, 1..10), cycles_settle = 10, cycles_measure = 5
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .closed_loop import AssistLaw
from .emd import Architecture, PiGains, SHat
from .mech import MechanicalParams, Provenance
from .motor import (
    DelayParams,
    EstimatedParams,
    MotorParams,
    OperatingPoint,
    VelocityEstimator,
    VelocityVariant,
)
from .params import ParameterError
from .tf_core import DelayRational, FrequencyGrid, Polynomial
from .tf_core.delay_rational import PADE_MAX_ORDER
from .tf_core.frequency import MIN_POINTS_PER_DECADE

REQUIRED = object()

# section -> {toml key: (field name, kind, default)}
SCHEMA = {
    "mechanical": {
        "j_h": ("J_h", "float", REQUIRED),
        "b_h": ("b_h", "float", REQUIRED),
        "j_m": ("J_m", "float", REQUIRED),
        "b_m": ("b_m", "float", REQUIRED),
        "k_h": ("K_h", "float", REQUIRED),
        "k_l": ("K_l", "float", REQUIRED),
        "n": ("N", "float", REQUIRED),
        "variant": ("variant", "str", Provenance.FIRST_PRINCIPLES.value),
    },
    "motor": {
        "p": ("p", "int", REQUIRED),
        "lambda_m": ("lambda_m", "float", REQUIRED),
        "l_d": ("L_d", "float", REQUIRED),
        "l_q": ("L_q", "float", REQUIRED),
        "r": ("R", "float", REQUIRED),
    },
    "estimates": {
        "lambda_m_hat": ("lambda_m_hat", "float", None),
        "l_d_hat": ("L_d_hat", "float", None),
        "l_q_hat": ("L_q_hat", "float", None),
        "r_hat": ("R_hat", "float", None),
    },
    "delays": {
        "tau_c": ("tau_c", "float", 0.0),
        "tau_p": ("tau_p", "float", 0.0),
    },
    "velocity_estimator": {
        "tau_omega": ("tau_omega", "float", 0.0),
        "variant": ("variant", "str", VelocityVariant.PHYSICAL.value),
    },
    "pi_gains": {
        "k_pd": ("K_pd", "float", REQUIRED),
        "k_id": ("K_id", "float", REQUIRED),
        "k_pq": ("K_pq", "float", REQUIRED),
        "k_iq": ("K_iq", "float", REQUIRED),
    },
    "s_hat": {
        "tau_d": ("tau_d", "float", 0.0),
    },
    "assist": {
        "gain": ("gain", "float", REQUIRED),
        "compensator_num": ("compensator_num", "floats", (1.0,)),
        "compensator_den": ("compensator_den", "floats", (1.0,)),
    },
    "grid": {
        "w_min": ("w_min", "float", 0.1),
        "w_max": ("w_max", "float", 1.0e4),
        "points_per_decade": ("points_per_decade", "float", 80.0),
    },
    "operating_point": {
        "i_d0": ("I_d0", "float", 0.0),
        "i_q0": ("I_q0", "float", 0.0),
        "omega_m0": ("omega_m0", "float", 0.0),
    },
    "analysis": {
        "pade_order": ("pade_order", "int", None),
        "cycles_settle": ("cycles_settle", "int", 10),
        "cycles_measure": ("cycles_measure", "int", 5),
    },
}
OPTIONAL_SECTIONS = {
    "estimates", "delays", "velocity_estimator", "pi_gains", "s_hat", "assist",
    "grid", "operating_point", "analysis",
}


class ConfigError(Exception):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, violations, path=None):
        self.violations = list(violations)
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(where + "; ".join(self.violations))


@dataclass(frozen=True)
class GridSpec:
    w_min: float = 0.1
    w_max: float = 1.0e4
    points_per_decade: float = 80.0

    def build(self) -> FrequencyGrid:
        return FrequencyGrid.logspace(self.w_min, self.w_max, self.points_per_decade)

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """``"min:max:ppd"`` as used on the command line."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must look like min:max:ppd, got {text!r}")
        try:
            spec = cls(*(float(x) for x in parts))
        except ValueError:
            raise ValueError(f"grid must look like min:max:ppd, got {text!r}") from None
        errs = spec.violations()
        if errs:
            raise ValueError("; ".join(errs))
        return spec

    def violations(self) -> list[str]:
        errs = []
        if not (math.isfinite(self.w_min) and self.w_min > 0):
            errs.append(f"grid.w_min: must be > 0, got {self.w_min!r}")
        if not (math.isfinite(self.w_max) and self.w_max > self.w_min):
            errs.append(f"grid.w_max: must exceed w_min, got {self.w_max!r}")
        if not (math.isfinite(self.points_per_decade)
                and self.points_per_decade >= MIN_POINTS_PER_DECADE):
            errs.append(
                f"grid.points_per_decade: must be >= {MIN_POINTS_PER_DECADE}, "
                f"got {self.points_per_decade!r}"
            )
        return errs


@dataclass(frozen=True, eq=False)
class SystemConfig:
    mechanical: MechanicalParams
    motor: MotorParams
    estimates: EstimatedParams
    delays: DelayParams
    velocity_estimator: VelocityEstimator
    pi_gains: Optional[PiGains]
    assist: Optional[AssistLaw]
    grid: GridSpec
    operating_point: OperatingPoint
    mech_variant: Provenance
    s_hat: SHat
    pade_order: Optional[int] = None
    cycles_settle: int = 10
    cycles_measure: int = 5
    source: Optional[str] = None

    def require_feedback(self) -> None:
        if self.pi_gains is None:
            raise ConfigError(
                ["pi_gains: feedback analysis needs a [pi_gains] section (k_pd, k_id, k_pq, k_iq)"],
                self.source,
            )

    def require_assist(self) -> None:
        if self.assist is None:
            raise ConfigError(["assist: margin analysis needs an [assist] section with gain"],
                              self.source)

    def require(self, architecture) -> None:
        if Architecture(architecture) is Architecture.FEEDBACK:
            self.require_feedback()

    @property
    def at_rest(self) -> bool:
        """True when the operating point is the origin, where the closed forms hold."""
        op = self.operating_point
        return op.omega_m0 == 0.0 and op.I_d0 == 0.0 and op.I_q0 == 0.0


def _coerce(section, key, kind, value, errs):
    name = f"{section}.{key}"
    if kind == "str":
        if not isinstance(value, str):
            errs.append(f"{name}: must be a string, got {value!r}")
            return None
        return value
    if kind == "floats":
        if not isinstance(value, list) or not value:
            errs.append(f"{name}: must be a non-empty list of numbers, got {value!r}")
            return None
        out = []
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                errs.append(f"{name}: entries must be finite numbers, got {v!r}")
                return None
            out.append(float(v))
        return tuple(out)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errs.append(f"{name}: must be a number, got {value!r}")
        return None
    if kind == "int":
        if isinstance(value, float) and not value.is_integer():
            errs.append(f"{name}: must be an integer, got {value!r}")
            return None
        return int(value)
    if not math.isfinite(value):
        errs.append(f"{name}: must be finite, got {value!r}")
        return None
    return float(value)


def _read_sections(data: dict, errs: list) -> dict:
    out = {}
    for key in data:
        if key not in SCHEMA:
            errs.append(f"{key}: unknown section")
    for section, fields_ in SCHEMA.items():
        raw = data.get(section)
        if raw is None:
            if section not in OPTIONAL_SECTIONS:
                errs.append(f"{section}: missing section")
            out[section] = None
            continue
        if not isinstance(raw, dict):
            errs.append(f"{section}: must be a table")
            out[section] = None
            continue
        for key in raw:
            if key not in fields_:
                errs.append(f"{section}.{key}: unknown key")
        values = {}
        for key, (fname, kind, default) in fields_.items():
            if key in raw:
                values[fname] = _coerce(section, key, kind, raw[key], errs)
            elif default is REQUIRED:
                errs.append(f"{section}.{key}: required")
                values[fname] = None
            else:
                values[fname] = default
        out[section] = values
    return out


def _build(section, factory, values, errs):
    if values is None or any(v is None for v in values.values()):
        return None
    try:
        return factory(**values)
    except ParameterError as exc:
        errs.extend(f"{section}.{v}" for v in exc.violations)
    except ValueError as exc:
        errs.append(f"{section}: {exc}")
    return None


def config_from_dict(data: dict, source: Optional[str] = None) -> SystemConfig:
    """Validate a parsed TOML document; raises :class:`ConfigError` listing all violations."""
    errs: list[str] = []
    sec = _read_sections(data, errs)

    mech_vals = dict(sec["mechanical"] or {})
    variant = mech_vals.pop("variant", None)
    mech_variant = None
    if variant is not None:
        try:
            mech_variant = Provenance(variant)
        except ValueError:
            errs.append(
                f"mechanical.variant: must be 'first-principles' or 'paper-verbatim', got {variant!r}"
            )
    mechanical = _build("mechanical", MechanicalParams, mech_vals if sec["mechanical"] else None, errs)
    motor = _build("motor", MotorParams, sec["motor"], errs)

    estimates = None
    est_vals = sec["estimates"] or {f: None for f, _, _ in SCHEMA["estimates"].values()}
    if motor is not None:
        truth = {"lambda_m_hat": motor.lambda_m, "L_d_hat": motor.L_d,
                 "L_q_hat": motor.L_q, "R_hat": motor.R}
        est_vals = {k: (truth[k] if v is None else v) for k, v in est_vals.items()}
        estimates = _build("estimates", EstimatedParams, est_vals, errs)

    delays = _build("delays", DelayParams, sec["delays"] or {}, errs)
    velocity = _build("velocity_estimator", VelocityEstimator, sec["velocity_estimator"] or {}, errs)
    pi_gains = _build("pi_gains", PiGains, sec["pi_gains"], errs) if sec["pi_gains"] else None
    s_hat = _build("s_hat", SHat, sec["s_hat"] or {}, errs)

    assist = None
    if sec["assist"] is not None:
        a = sec["assist"]
        comp = None
        if a["compensator_num"] is not None and a["compensator_den"] is not None:
            den = Polynomial(a["compensator_den"])
            if den.is_zero:
                errs.append("assist.compensator_den: must not be the zero polynomial")
            else:
                comp = DelayRational(Polynomial(a["compensator_num"]), den)
                if not comp.is_proper:
                    errs.append("assist.compensator: must be proper (num degree <= den degree)")
                    comp = None
        if comp is not None and a["gain"] is not None:
            assist = _build("assist", AssistLaw, {"gain": a["gain"], "compensator": comp}, errs)

    g = sec["grid"] or {}
    grid = GridSpec(**g) if g and all(v is not None for v in g.values()) else GridSpec()
    errs.extend(grid.violations())

    op = None
    op_vals = sec["operating_point"] or {}
    if motor is not None and all(v is not None for v in op_vals.values()):
        op = OperatingPoint.steady(motor, **op_vals)

    an = sec["analysis"] or {"pade_order": None, "cycles_settle": 10, "cycles_measure": 5}
    pade = an.get("pade_order")
    if pade is not None and not (1 <= pade <= PADE_MAX_ORDER):
        errs.append(f"analysis.pade_order: must be in 1..{PADE_MAX_ORDER}, got {pade!r}")
    if an.get("cycles_settle") is not None and an["cycles_settle"] < 0:
        errs.append(f"analysis.cycles_settle: must be >= 0, got {an['cycles_settle']!r}")
    if an.get("cycles_measure") is not None and an["cycles_measure"] < 1:
        errs.append(f"analysis.cycles_measure: must be >= 1, got {an['cycles_measure']!r}")

    if errs:
        raise ConfigError(errs, source)
    return SystemConfig(
        mechanical=mechanical,
        motor=motor,
        estimates=estimates,
        delays=delays,
        velocity_estimator=velocity,
        pi_gains=pi_gains,
        assist=assist,
        grid=grid,
        operating_point=op if op is not None else OperatingPoint(),
        mech_variant=mech_variant,
        s_hat=s_hat,
        pade_order=pade,
        cycles_settle=an["cycles_settle"],
        cycles_measure=an["cycles_measure"],
        source=source,
    )


def load_config(path) -> SystemConfig:
    """Parse and validate a TOML config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc.strerror or exc}"], str(path)) from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        msg = getattr(exc, "msg", str(exc))
        where = f" at line {line}, column {col}" if line is not None else ""
        raise ConfigError([f"parse error{where}: {msg}"], str(path)) from None
    return config_from_dict(data, str(path))


def sample_config_path() -> Path:
    """Location of the shipped illustrative configuration."""
    return Path(__file__).resolve().parent / "data" / "sample_eps.toml"


__all__ = [
    "ConfigError",
    "GridSpec",
    "SystemConfig",
    "config_from_dict",
    "load_config",
    "sample_config_path",
]
