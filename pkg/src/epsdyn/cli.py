"""``epsdyn`` command-line tool.

Subcommands: ``bode``, ``margins``, ``compare``, ``sim``, ``validate``.
Exit codes: 0 success, 1 usage or configuration error, 2 computation
error, 3 instability.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, pipeline
from .closed_loop import loop_unstable
from .config import ConfigError, GridSpec, SystemConfig, load_config, sample_config_path
from .emd import Architecture
from .mech import Provenance, resonances
from .params import ParameterError
from .simtime import (
    ImproperError,
    UnstableSystemError,
    dwell_step,
    integrate,
    to_state_space,
)
from .tf_core import FrequencyGrid, FrequencyResponse, dc_gain
from .tf_core.delay_rational import PADE_MAX_ORDER, STABILITY_TOL

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPUTE = 2
EXIT_UNSTABLE = 3

BODE_HEADER = ("omega_rad_s", "mag_db", "phase_deg")

# Output file names of ``compare``.
RATIO_FF = "panel_a_ratio_ff.csv"
RATIO_FB = "panel_a_ratio_fb.csv"
MECHANICAL = "panel_b_mechanical.csv"
EOLTF = "panel_b_eoltf.csv"
MARGINS = "margins.txt"
PROVENANCE = "mech_provenance.csv"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with the usage exit code of this tool (1 instead of 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(rows, header, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(float(v)) for v in row])


def _emit(path: Optional[Path], header, rows) -> None:
    if path is None:
        write_csv(rows, header, sys.stdout)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_csv(rows, header, fh)


def bode_rows(fr: FrequencyResponse):
    w, mag, ph = pipeline.bode_columns(fr)
    return zip(w, mag, ph)


def _grid(cfg: SystemConfig, args) -> FrequencyGrid:
    spec = cfg.grid
    if getattr(args, "grid", None):
        try:
            spec = GridSpec.parse(args.grid)
        except ValueError as exc:
            raise UsageError(f"--grid: {exc}") from None
    return spec.build()


def _pade(cfg: SystemConfig, args) -> int:
    order = getattr(args, "pade", None)
    if order is None:
        order = cfg.pade_order or pipeline.DEFAULT_PADE_ORDER
    if not 1 <= order <= PADE_MAX_ORDER:
        raise UsageError(f"--pade: order must be in 1..{PADE_MAX_ORDER}, got {order}")
    return order


def _out_file(args, name: str) -> Optional[Path]:
    return Path(args.out) / name if args.out else None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(cfg: SystemConfig, args) -> int:
    if args.arch:
        cfg.require(args.arch)
    mech = pipeline.mechanics(cfg)
    print("config=ok")
    print(f"source={cfg.source}")
    print(f"mech_variant={cfg.mech_variant.value}")
    print(f"velocity_estimator={cfg.velocity_estimator.variant.value}")
    print(f"pi_gains={'present' if cfg.pi_gains else 'absent'}")
    print(f"assist={'present' if cfg.assist else 'absent'}")
    print(f"grid_points={len(cfg.grid.build())}")
    res = resonances(mech)
    print("resonances_rad_s=" + ",".join(_fmt(r) for r in res))
    return EXIT_OK


def cmd_bode(cfg: SystemConfig, args) -> int:
    arch = args.arch or Architecture.FEEDBACK.value
    grid = _grid(cfg, args)
    fr = pipeline.response(cfg, args.subject, arch, grid)
    _emit(_out_file(args, f"bode_{args.subject}_{arch}.csv"), BODE_HEADER, bode_rows(fr))
    return EXIT_OK


def _print_report(report, unstable: bool, rhp) -> None:
    kv = report.as_key_values()
    pm = kv["phase_margin_deg"]
    print(f"# steering loop margins [{kv.get('architecture', '')}]")
    print(f"#   gain margin  {kv['gain_margin_db']} dB at {kv['phase_crossover_rad_s']} rad/s")
    print(f"#   phase margin {pm} deg at {kv['gain_crossover_rad_s']} rad/s")
    for key, value in kv.items():
        print(f"{key}={value}")
    for c in report.all_crossovers:
        unit = "deg" if c.kind == "gain" else "db"
        print(f"crossover={c.kind},{_fmt(c.omega)},{_fmt(c.margin)}{unit}")
    print(f"open_loop_rhp_poles={'unknown' if rhp is None else rhp}")
    print(f"unstable={'true' if unstable else 'false'}")


def cmd_margins(cfg: SystemConfig, args) -> int:
    arch = args.arch or Architecture.FEEDBACK.value
    cfg.require(arch)
    cfg.require_assist()
    grid = _grid(cfg, args)
    report, loop, rhp = pipeline.margins(cfg, arch, grid)
    unstable = loop_unstable(report, loop, rhp or 0)
    _print_report(report, unstable, rhp)
    return EXIT_UNSTABLE if unstable else EXIT_OK


def cmd_compare(cfg: SystemConfig, args) -> int:
    cfg.require_feedback()
    cfg.require_assist()
    if not args.out:
        raise UsageError("compare needs --out <dir>")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid(cfg, args)
    w = grid.omegas

    for arch, name in (("ff", RATIO_FF), ("fb", RATIO_FB)):
        fr = pipeline.response(cfg, "ratio", arch, grid)
        _emit(out / name, BODE_HEADER, bode_rows(fr))

    mech = pipeline.mechanics(cfg)
    bare = FrequencyResponse.from_function(mech.to_Th_from_Tm.evaluate, grid)
    _emit(out / MECHANICAL, BODE_HEADER, bode_rows(bare))

    cols = [w]
    for arch in ("ff", "fb"):
        _, mag, ph = pipeline.bode_columns(pipeline.response(cfg, "Z_t", arch, grid))
        cols += [mag, ph]
    _emit(out / EOLTF,
          ("omega_rad_s", "mag_db_ff", "phase_deg_ff", "mag_db_fb", "phase_deg_fb"),
          zip(*cols))

    paper = pipeline.mechanics(cfg, Provenance.PAPER)
    first = pipeline.mechanics(cfg, Provenance.FIRST_PRINCIPLES)
    cols = [w]
    for model in (paper, first):
        _, mag, ph = pipeline.bode_columns(
            FrequencyResponse.from_function(model.to_Th_from_Tm.evaluate, grid)
        )
        cols += [mag, ph]
    _emit(out / PROVENANCE,
          ("omega_rad_s", "mag_db_paper_verbatim", "phase_deg_paper_verbatim",
           "mag_db_first_principles", "phase_deg_first_principles"),
          zip(*cols))

    lines = ["# steering loop margins; gain is illustrative (see the config)"]
    any_unstable = False
    reports = {}
    for arch in ("ff", "fb"):
        report, loop, rhp = pipeline.margins(cfg, arch, grid)
        unstable = loop_unstable(report, loop, rhp or 0)
        any_unstable |= unstable
        reports[arch] = report
        for key, value in report.as_key_values().items():
            if key != "architecture":
                lines.append(f"{arch}.{key}={value}")
        lines.append(f"{arch}.unstable={'true' if unstable else 'false'}")
    ideal = pipeline.ideal_margins(cfg, grid)
    for key, value in ideal.as_key_values().items():
        if key != "architecture":
            lines.append(f"ideal.{key}={value}")
    ff, fb = reports["ff"], reports["fb"]
    if ff.phase_margin_deg is not None and fb.phase_margin_deg is not None:
        lines.append(f"ff_below_fb_gain={'true' if ff.gain_margin_db < fb.gain_margin_db else 'false'}")
        lines.append(
            f"ff_below_fb_phase={'true' if ff.phase_margin_deg < fb.phase_margin_deg else 'false'}"
        )
    for label, model in (("paper_verbatim", paper), ("first_principles", first)):
        lines.append(f"resonances_{label}_rad_s=" + ",".join(_fmt(r) for r in resonances(model)))
    text = "\n".join(lines) + "\n"
    (out / MARGINS).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_UNSTABLE if any_unstable else EXIT_OK


def cmd_sim(cfg: SystemConfig, args) -> int:
    arch = args.arch or Architecture.FEEDBACK.value
    cfg.require(arch)
    if not cfg.at_rest:
        raise UsageError("sim needs the operating point at rest (rationalized forms only)")
    for flag in ("omega", "duration"):
        value = getattr(args, flag)
        if value is not None and not (value > 0.0 and math.isfinite(value)):
            raise UsageError(f"--{flag}: must be finite and > 0, got {value}")
    order = _pade(cfg, args)
    tf = pipeline.rational_subject(cfg, args.subject, arch, order)
    ss = to_state_space(tf)
    poles = ss.poles()
    if poles.size and np.any(poles.real >= -STABILITY_TOL):
        bad = poles[poles.real >= -STABILITY_TOL]
        print(f"unstable subject {args.subject} ({arch}); poles in the closed right half plane:",
              file=sys.stderr)
        for p in bad:
            print(f"  {p.real:.17g} {p.imag:+.17g}j", file=sys.stderr)
        return EXIT_UNSTABLE
    model = ss.balanced()
    grid = _grid(cfg, args)

    if args.excitation == "step":
        h = 0.5 / float(np.max(np.abs(poles))) if poles.size else 1e-3
        duration = args.duration
        if duration is None:
            slow = float(np.min(np.abs(poles.real))) if poles.size else 1.0
            duration = min(60.0, 12.0 / slow)
        traj = integrate(model, lambda t: np.ones_like(t), h, duration=duration)
        final = traj.y[-1]
        print(f"# step response of {args.subject} ({arch}), pade order {order}")
        print(f"final_value={_fmt(final)}")
        print(f"dc_gain={_fmt(float(np.real(dc_gain(tf))))}")
    else:
        omega = args.omega
        if omega is None:
            omega = float(np.sqrt(grid.omegas[0] * grid.omegas[-1]))
        period = 2.0 * math.pi / omega
        h = dwell_step(model, omega)
        steps = int(math.ceil(period / h))
        h = period / steps
        cycles = cfg.cycles_settle + cfg.cycles_measure
        n_steps = steps * cycles
        if args.duration is not None:
            n_steps = max(n_steps, int(math.ceil(args.duration / h)))
        traj = integrate(model, lambda t: np.sin(omega * t), h, n_steps, f_max_hz=omega / (2 * math.pi))
        start = steps * cfg.cycles_settle
        t, y = traj.t[start:], traj.y[start:]
        basis = np.column_stack([np.sin(omega * t), np.cos(omega * t), np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        sim = complex(coef[0], coef[1])
        exact = complex(pipeline.response(cfg, args.subject, arch,
                                          FrequencyGrid(np.array([omega]))).values[0])
        dmag = 100.0 * (abs(sim) / abs(exact) - 1.0)
        dph = math.degrees(np.angle(sim / exact))
        print(f"# sine dwell of {args.subject} ({arch}) at {omega:.6g} rad/s, pade order {order}")
        print(f"omega_rad_s={_fmt(omega)}")
        print(f"analytic_mag_db={_fmt(20 * math.log10(abs(exact)))}")
        print(f"analytic_phase_deg={_fmt(math.degrees(np.angle(exact)))}")
        print(f"simulated_mag_db={_fmt(20 * math.log10(abs(sim)))}")
        print(f"simulated_phase_deg={_fmt(math.degrees(np.angle(sim)))}")
        print(f"delta_mag_pct={_fmt(dmag)}")
        print(f"delta_phase_deg={_fmt(dph)}")
    for warning in traj.warnings:
        print(f"warning={warning}")
    if args.out:
        path = Path(args.out) / f"sim_{args.subject}_{arch}_{args.excitation}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        traj.to_csv(path)
        print(f"trajectory={path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

SUBJECTS = [s.value for s in pipeline.Subject]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help="TOML config (default: the shipped illustrative sample)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--grid", default=None, help="frequency grid min:max:ppd (rad/s)")
    common.add_argument("--pade", type=int, default=None, help="Pade order for rationalized forms")

    arch = argparse.ArgumentParser(add_help=False)
    arch.add_argument("--arch", choices=[a.value for a in Architecture], default=None,
                      help="current-control architecture (default fb)")

    parser = _Parser(prog="epsdyn", description="EPS motor-drive and steering-loop analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bode", parents=[common, arch], help="Bode data of one subject as CSV")
    p.add_argument("--subject", required=True, choices=SUBJECTS)
    p.set_defaults(func=cmd_bode)

    p = sub.add_parser("margins", parents=[common, arch], help="steering-loop stability margins")
    p.set_defaults(func=cmd_margins)

    p = sub.add_parser("compare", parents=[common], help="FF versus FB comparison bundle")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sim", parents=[common, arch], help="time-domain simulation")
    p.add_argument("--subject", required=True, choices=SUBJECTS)
    p.add_argument("--excitation", choices=["step", "sine"], default="step")
    p.add_argument("--omega", type=float, default=None,
                   help="sine frequency in rad/s (default: grid midpoint)")
    p.add_argument("--duration", type=float, default=None, help="simulated time in s")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("validate", parents=[common, arch], help="load and check a config")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config if args.config else sample_config_path())
        if getattr(args, "pade", None) is not None:
            _pade(cfg, args)
        return args.func(cfg, args)
    except (ConfigError, UsageError) as exc:
        print(f"epsdyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnstableSystemError as exc:
        print(f"epsdyn: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (ParameterError, ImproperError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"epsdyn: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
