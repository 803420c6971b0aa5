"""Time the numba kernels against their pure-numpy counterparts.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is called once
before timing so numba compilation is excluded; the best of ``--repeat``
runs is reported.
"""
import argparse
import timeit

import numpy as np

from epsdyn import _kernels as k
from epsdyn.config import load_config, sample_config_path
from epsdyn.pipeline import rational_subject
from epsdyn.simtime import to_state_space


def cases(n_points: int, n_steps: int):
    rng = np.random.default_rng(0)
    coeffs = rng.normal(size=12)
    s = 1j * np.logspace(-1, 4, n_points)
    m = rng.normal(size=(n_points, 2, 2)) + 1j * rng.normal(size=(n_points, 2, 2))
    rhs = rng.normal(size=(n_points, 2, 3)) + 1j * rng.normal(size=(n_points, 2, 3))

    cfg = load_config(sample_config_path())
    ss = to_state_space(rational_subject(cfg, "W_t", "fb", 4)).balanced()
    h = 2e-6
    u = np.sin(100.0 * h / 2 * np.arange(2 * n_steps + 1))
    rk_args = (ss.A, ss.B_in, ss.C_out, ss.D_dir, u, h)
    return [
        (f"horner (deg 11, {n_points} pts)", "horner", (coeffs, s)),
        (f"solve2x2 ({n_points} systems)", "solve2x2", (m, rhs)),
        (f"rk4_lti (order {ss.order}, {n_steps} steps)", "rk4_lti", rk_args),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=200000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if not k.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed")
    print(f"{'kernel':<38}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for label, name, call_args in cases(args.points, args.steps):
        fn_np = getattr(k, f"{name}_np")
        fn_nb = getattr(k, f"{name}_nb")
        fn_nb(*call_args)  # compile
        t_np = min(timeit.repeat(lambda: fn_np(*call_args), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn_nb(*call_args), number=1, repeat=args.repeat))
        print(f"{label:<38}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
