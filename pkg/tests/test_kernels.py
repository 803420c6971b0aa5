import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from epsdyn import _kernels as k

needs_numba = pytest.mark.skipif(not k.NUMBA_AVAILABLE, reason="numba not installed")

coeff_lists = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=12)


@needs_numba
@given(coeff_lists, st.floats(1e-3, 1e4))
@settings(max_examples=60, deadline=None)
def test_horner_backends_agree(coeffs, w):
    s = 1j * np.array([w, 2 * w, 0.5 * w])
    a = k.horner_np(coeffs, s)
    b = k.horner_nb(coeffs, s)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12 * np.max(np.abs(a), initial=1.0))


def test_horner_matches_polyval():
    coeffs = np.array([1.0, -2.0, 0.5, 3.0])
    s = np.array([0.3 + 1.2j, -4.0j, 2.0])
    ref = np.polyval(coeffs[::-1], s)
    np.testing.assert_allclose(k.horner(coeffs, s), ref, rtol=1e-14)


def test_horner_keeps_shape():
    s = np.ones((3, 4), dtype=complex)
    assert k.horner([1.0, 1.0], s).shape == (3, 4)


@needs_numba
def test_solve2x2_backends_agree(rng):
    m = rng.normal(size=(200, 2, 2)) + 1j * rng.normal(size=(200, 2, 2))
    rhs = rng.normal(size=(200, 2, 3)) + 1j * rng.normal(size=(200, 2, 3))
    xa, da = k.solve2x2_np(m, rhs)
    xb, db = k.solve2x2_nb(m, rhs)
    np.testing.assert_allclose(xa, xb, rtol=1e-12)
    np.testing.assert_allclose(da, db, rtol=1e-14)
    np.testing.assert_allclose(xa, np.linalg.solve(m, rhs), rtol=1e-9)


@pytest.mark.parametrize("name", ["solve2x2_np", "solve2x2_nb"])
def test_solve2x2_singular_is_nan(name):
    fn = getattr(k, name)
    if fn is None:
        pytest.skip("numba not installed")
    m = np.array([[[1.0, 2.0], [2.0, 4.0]]], dtype=complex)
    x, det = fn(m, np.ones((1, 2, 1)))
    assert det[0] == 0
    assert np.all(np.isnan(x))


def _lti(rng, n):
    a = rng.normal(size=(n, n))
    a -= (np.max(np.real(np.linalg.eigvals(a))) + 1.0) * np.eye(n)
    return a, rng.normal(size=(n, 1)), rng.normal(size=(1, n)), rng.normal(size=(1, 1))


@needs_numba
def test_rk4_backends_agree(rng):
    for n in (1, 3, 6):
        a, b, c, d = _lti(rng, n)
        u = np.sin(np.linspace(0.0, 10.0, 2001))
        x0 = rng.normal(size=n)
        ya = k.rk4_lti_np(a, b, c, d, u, 0.01, x0)
        yb = k.rk4_lti_nb(a, b, c, d, u, 0.01, x0)
        np.testing.assert_allclose(ya, yb, rtol=1e-10, atol=1e-12)


def test_rk4_free_response_matches_expm(rng):
    a, b, c, d = _lti(rng, 4)
    x0 = rng.normal(size=4)
    h, n = 1e-3, 500
    y = k.rk4_lti(a, b, c, d, np.zeros(2 * n + 1), h, x0)
    ref = c @ expm(a * h * n) @ x0
    np.testing.assert_allclose(y[-1], ref, rtol=1e-9, atol=1e-12)


def test_rk4_static_model():
    y = k.rk4_lti(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[2.0]], np.arange(5.0), 0.5)
    np.testing.assert_array_equal(y[:, 0], [0.0, 4.0, 8.0])


@pytest.mark.parametrize("flag, expect", [("1", "numpy"), ("", "numba" if k.NUMBA_AVAILABLE else "numpy")])
def test_env_switch(flag, expect):
    env = dict(os.environ, EPSDYN_DISABLE_NUMBA=flag)
    code = "from epsdyn import _kernels as k; print(k.BACKEND, k.USE_NUMBA, k.horner is k.horner_np)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, timeout=120)
    backend, use, is_np = out.stdout.split()
    assert backend == expect
    assert use == str(expect == "numba")
    assert is_np == str(expect == "numpy")
