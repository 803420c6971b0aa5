"""Real polynomials in the Laplace variable, ascending powers."""
from __future__ import annotations

import numbers

import numpy as np

from .. import _kernels


def _trim(coeffs: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        return np.zeros(1)
    return coeffs[: nz[-1] + 1]


class Polynomial:
    """Immutable real polynomial ``c[0] + c[1] s + ... + c[n] s^n``.

    The highest-power coefficient is nonzero unless the polynomial is
    identically zero, in which case ``coeffs == [0.0]`` and ``degree == -1``.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs=(0.0,)):
        if isinstance(coeffs, Polynomial):
            c = coeffs._c
        else:
            c = np.atleast_1d(np.asarray(coeffs, dtype=np.float64)).copy()
            if c.ndim != 1:
                raise ValueError("polynomial coefficients must be one-dimensional")
            if c.size == 0:
                c = np.zeros(1)
            if not np.all(np.isfinite(c)):
                raise ValueError("polynomial coefficients must be finite")
            c = _trim(c)
            c.setflags(write=False)
        self._c = c

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value: float) -> "Polynomial":
        return cls([value])

    @classmethod
    def s(cls, power: int = 1) -> "Polynomial":
        c = np.zeros(power + 1)
        c[power] = 1.0
        return cls(c)

    # -- basic properties -------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return -1 if self.is_zero else self._c.size - 1

    @property
    def is_zero(self) -> bool:
        return self._c.size == 1 and self._c[0] == 0.0

    @property
    def leading(self) -> float:
        return float(self._c[-1])

    def low_order_zeros(self) -> int:
        """Multiplicity of the root at ``s = 0`` (0 for the zero polynomial)."""
        if self.is_zero:
            return 0
        return int(np.flatnonzero(self._c)[0])

    def shift_down(self, k: int) -> "Polynomial":
        """Divide by ``s**k``; the low ``k`` coefficients must be exactly zero."""
        if k == 0:
            return self
        if np.any(self._c[:k] != 0.0):
            raise ValueError(f"polynomial is not divisible by s^{k}")
        return Polynomial(self._c[k:])

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, numbers.Real):
            return Polynomial([float(other)])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._c, other._c
        n = max(a.size, b.size)
        out = np.zeros(n)
        out[: a.size] += a
        out[: b.size] += b
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._c, other._c
        n = max(a.size, b.size)
        out = np.zeros(n)
        out[: a.size] += a
        out[: b.size] -= b
        return Polynomial(out)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return Polynomial(self._c * float(other))
        if not isinstance(other, Polynomial):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return Polynomial()
        return Polynomial(np.convolve(self._c, other._c))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial([1.0])
        for _ in range(int(k)):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, numbers.Real):
            other = Polynomial([float(other)])
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._c.size == other._c.size and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash(self._c.tobytes())

    def __repr__(self):
        return f"Polynomial({self._c.tolist()!r})"

    def __str__(self):
        if self.is_zero:
            return "0"
        terms = []
        for k, c in enumerate(self._c):
            if c == 0.0:
                continue
            if k == 0:
                terms.append(f"{c:g}")
            elif k == 1:
                terms.append(f"{c:g}*s")
            else:
                terms.append(f"{c:g}*s^{k}")
        return " + ".join(terms)

    # -- evaluation -------------------------------------------------------
    def __call__(self, s):
        """Evaluate at a scalar (returned as a scalar) or an array (complex result)."""
        if np.ndim(s) == 0:
            return np.polynomial.polynomial.polyval(s, self._c)
        return _kernels.horner(self._c, np.asarray(s, dtype=np.complex128))

    def derivative(self) -> "Polynomial":
        if self._c.size == 1:
            return Polynomial()
        return Polynomial(self._c[1:] * np.arange(1, self._c.size))

    def roots(self) -> np.ndarray:
        """All complex roots, from companion-matrix eigenvalues.

        Exact zero roots are split off first; each remaining root gets a few
        Newton refinement steps that are kept only if they shrink the residual.
        """
        if self.degree < 1:
            return np.zeros(0, dtype=np.complex128)
        k0 = self.low_order_zeros()
        core = self._c[k0:]
        n = core.size - 1
        roots = np.zeros(0, dtype=np.complex128)
        if n >= 1:
            # The reversed polynomial copes with a tiny leading coefficient;
            # keep whichever root set has the smaller scaled residual.
            forward = _polish(core, _companion_roots(core))
            with np.errstate(divide="ignore", invalid="ignore"):
                backward = _polish(core, 1.0 / _companion_roots(core[::-1]))
            if _scaled_residual(core, backward) < _scaled_residual(core, forward):
                roots = backward
            else:
                roots = forward
        roots = np.concatenate([np.zeros(k0, dtype=np.complex128), roots])
        return roots[np.lexsort((roots.imag, roots.real))]


def _companion_roots(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.size - 1
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -coeffs[:-1] / coeffs[-1]
    return np.linalg.eigvals(comp).astype(np.complex128)


def _scaled_residual(coeffs: np.ndarray, roots: np.ndarray) -> float:
    n = coeffs.size - 1
    scale = np.max(np.abs(coeffs))
    with np.errstate(over="ignore", invalid="ignore"):
        res = [abs(np.polynomial.polynomial.polyval(r, coeffs)) / (scale * max(1.0, abs(r)) ** n)
               for r in roots]
    res = np.asarray(res)
    return float(np.max(res)) if np.all(np.isfinite(res)) else np.inf


def _polish(coeffs: np.ndarray, roots: np.ndarray, iters: int = 3) -> np.ndarray:
    dcoeffs = coeffs[1:] * np.arange(1, coeffs.size)
    out = roots.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for i, r in enumerate(roots):
            out[i] = _polish_one(coeffs, dcoeffs, r, iters)
    return out


def _polish_one(coeffs, dcoeffs, r, iters):
    best = r
    best_res = abs(np.polynomial.polynomial.polyval(r, coeffs))
    z = r
    for _ in range(iters):
        dp = np.polynomial.polynomial.polyval(z, dcoeffs)
        if dp == 0 or not np.isfinite(dp):
            break
        z = z - np.polynomial.polynomial.polyval(z, coeffs) / dp
        res = abs(np.polynomial.polynomial.polyval(z, coeffs))
        if res < best_res:
            best, best_res = z, res
    return best
