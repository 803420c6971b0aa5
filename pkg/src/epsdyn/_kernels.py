"""Hot numeric loops.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy
version. The public names (``horner``, ``solve2x2``, ``rk4_lti``) point at
the numba build unless numba is missing or ``EPSDYN_DISABLE_NUMBA`` is set
to a truthy value before import.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("EPSDYN_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG in {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and not DISABLED_BY_ENV


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def horner_numpy(coeffs, s):
    """Evaluate an ascending-power real polynomial at complex points."""
    out = np.zeros(s.shape, dtype=np.complex128)
    for c in coeffs[::-1]:
        out = out * s + c
    return out


def solve2x2_numpy(m, rhs):
    """Batched Cramer solve of ``m[k] @ x[k] = rhs[k]``.

    ``m`` has shape (n, 2, 2), ``rhs`` shape (n, 2, r). Returns ``(x, det)``.
    Rows with zero determinant come back as nan.
    """
    a, b = m[:, 0, 0], m[:, 0, 1]
    c, d = m[:, 1, 0], m[:, 1, 1]
    det = a * d - b * c
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
    inv[det == 0] = np.nan
    x = np.empty(rhs.shape, dtype=np.complex128)
    x[:, 0, :] = (d[:, None] * rhs[:, 0, :] - b[:, None] * rhs[:, 1, :]) * inv[:, None]
    x[:, 1, :] = (a[:, None] * rhs[:, 1, :] - c[:, None] * rhs[:, 0, :]) * inv[:, None]
    return x, det


def rk4_step_matrices(a, b, h):
    """One classical RK4 step of ``x' = A x + B u`` written as a linear map.

    Returns ``(phi, g0, gh, g1)`` with
    ``x[k+1] = phi x[k] + g0 u(t_k) + gh u(t_k + h/2) + g1 u(t_k + h)``.
    """
    n = a.shape[0]
    eye = np.eye(n)
    ha = h * a
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    phi = eye + ha + ha2 / 2.0 + ha3 / 6.0 + ha3 @ ha / 24.0
    g0, gh, g1 = _input_maps(a, h)
    return phi, g0 @ b, gh @ b, g1 @ b


def _input_maps(a, h):
    n = a.shape[0]
    eye = np.eye(n)
    # Each stage k_i written as a linear function of (u0, uh, u1) with x = 0:
    # k1 = A x + u0
    # k2 = A (x + h/2 k1) + uh
    # k3 = A (x + h/2 k2) + uh
    # k4 = A (x + h k3) + u1
    # Track each k_i as a linear function of (u0, uh, u1) with x = 0.
    k1 = (eye, np.zeros((n, n)), np.zeros((n, n)))
    k2 = tuple(h / 2.0 * a @ t for t in k1)
    k2 = (k2[0], k2[1] + eye, k2[2])
    k3 = tuple(h / 2.0 * a @ t for t in k2)
    k3 = (k3[0], k3[1] + eye, k3[2])
    k4 = tuple(h * a @ t for t in k3)
    k4 = (k4[0], k4[1], k4[2] + eye)
    maps = [h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(3)]
    return maps[0], maps[1], maps[2]


def rk4_drive(a, b, u_half, h):
    """One-step map ``phi`` and the per-step input term of the RK4 recurrence.

    ``u_half`` holds the input at every half step, shape (2*n_steps + 1, m).
    Returns ``(phi, drive)`` with ``x[k+1] = phi x[k] + drive[k]``.
    """
    phi, g0, gh, g1 = rk4_step_matrices(a, b, h)
    u_full = u_half[::2]
    u_mid = u_half[1::2]
    # Input contribution is known in advance; only the recurrence is sequential.
    drive = u_full[:-1] @ g0.T + u_mid @ gh.T + u_full[1:] @ g1.T
    return phi, np.ascontiguousarray(drive)


def recurrence_numpy(phi, drive, x0):
    """States of ``x[k+1] = phi x[k] + drive[k]``, shape (n_steps + 1, n)."""
    states = np.empty((drive.shape[0] + 1, x0.shape[0]))
    x = x0.copy()
    states[0] = x
    for k in range(drive.shape[0]):
        x = phi @ x + drive[k]
        states[k + 1] = x
    return states


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _horner_loop(coeffs, s):
    # Coefficient-major order keeps the inner loop free of a dependency chain.
    out = np.zeros(s.shape[0], dtype=np.complex128)
    for k in range(coeffs.shape[0] - 1, -1, -1):
        c = coeffs[k]
        for i in range(s.shape[0]):
            out[i] = out[i] * s[i] + c
    return out


def _solve2x2_loop(m, rhs):
    n = m.shape[0]
    r = rhs.shape[2]
    x = np.empty(rhs.shape, dtype=np.complex128)
    det = np.empty(n, dtype=np.complex128)
    for k in range(n):
        a = m[k, 0, 0]
        b = m[k, 0, 1]
        c = m[k, 1, 0]
        d = m[k, 1, 1]
        dk = a * d - b * c
        det[k] = dk
        for j in range(r):
            if dk == 0:
                x[k, 0, j] = np.nan
                x[k, 1, j] = np.nan
            else:
                x[k, 0, j] = (d * rhs[k, 0, j] - b * rhs[k, 1, j]) / dk
                x[k, 1, j] = (a * rhs[k, 1, j] - c * rhs[k, 0, j]) / dk
    return x, det


def _recurrence_loop(phi, drive, x0):
    n_steps = drive.shape[0]
    n = x0.shape[0]
    states = np.empty((n_steps + 1, n))
    x = x0.copy()
    nxt = np.empty(n)
    states[0] = x
    for k in range(n_steps):
        for i in range(n):
            acc = drive[k, i]
            for j in range(n):
                acc += phi[i, j] * x[j]
            nxt[i] = acc
        for i in range(n):
            x[i] = nxt[i]
            states[k + 1, i] = nxt[i]
    return states


if NUMBA_AVAILABLE:
    _njit = numba.njit(cache=True, nogil=True)
    horner_numba = _njit(_horner_loop)
    solve2x2_numba = _njit(_solve2x2_loop)
    recurrence_numba = _njit(_recurrence_loop)
else:  # pragma: no cover
    horner_numba = solve2x2_numba = recurrence_numba = None


def _prep_horner(fn):
    def wrapper(coeffs, s):
        coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
        s = np.asarray(s, dtype=np.complex128)
        shape = s.shape
        return fn(coeffs, np.ascontiguousarray(s.ravel())).reshape(shape)
    wrapper.__name__ = getattr(fn, "__name__", "horner")
    return wrapper


def _prep_solve(fn):
    def wrapper(m, rhs):
        m = np.ascontiguousarray(m, dtype=np.complex128)
        rhs = np.ascontiguousarray(rhs, dtype=np.complex128)
        return fn(m, rhs)
    return wrapper


def _prep_rk4(recurrence):
    def rk4_lti(a, b, c, d, u_half, h, x0=None):
        """Fixed-step RK4 for an LTI state-space model.

        ``u_half`` holds the input at every half step, shape (2*n_steps + 1, m).
        Returns the output at every full step, shape (n_steps + 1, p).
        """
        a = np.ascontiguousarray(a, dtype=np.float64)
        b = np.ascontiguousarray(b, dtype=np.float64)
        c = np.asarray(c, dtype=np.float64)
        d = np.asarray(d, dtype=np.float64)
        u_half = np.asarray(u_half, dtype=np.float64)
        if u_half.ndim == 1:
            u_half = u_half[:, None]
        u_full = u_half[::2]
        if a.shape[0] == 0:
            return u_full @ d.T
        x0 = np.zeros(a.shape[0]) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
        phi, drive = rk4_drive(a, b, u_half, float(h))
        states = recurrence(np.ascontiguousarray(phi), drive, x0)
        return states @ c.T + u_full @ d.T
    return rk4_lti


horner_np = _prep_horner(horner_numpy)
solve2x2_np = _prep_solve(solve2x2_numpy)
rk4_lti_np = _prep_rk4(recurrence_numpy)

if NUMBA_AVAILABLE:
    horner_nb = _prep_horner(horner_numba)
    solve2x2_nb = _prep_solve(solve2x2_numba)
    rk4_lti_nb = _prep_rk4(recurrence_numba)
else:  # pragma: no cover
    horner_nb = solve2x2_nb = rk4_lti_nb = None

if USE_NUMBA:
    horner, solve2x2, rk4_lti = horner_nb, solve2x2_nb, rk4_lti_nb
else:
    horner, solve2x2, rk4_lti = horner_np, solve2x2_np, rk4_lti_np

BACKEND = "numba" if USE_NUMBA else "numpy"
