"""Rational transfer functions carrying an exact transport lag."""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np

from .polynomial import Polynomial

#: Below this |den(jw)| the evaluation point is treated as an imaginary-axis pole.
POLE_TOL = 1e-300
#: Strict stability threshold on pole real parts.
STABILITY_TOL = 1e-9
PADE_MAX_ORDER = 10


class PoleOnAxisError(ArithmeticError):
    """Raised when a transfer function is evaluated on one of its poles."""


class DelayMismatchError(ValueError):
    """Raised when adding transfer functions with different transport lags."""


class NonzeroDelayError(ValueError):
    """Raised by operations that need a delay-free (rational) transfer function."""


class DegenerateFeedbackError(ArithmeticError):
    """Raised when ``1 + g h`` is identically zero."""


def _poly(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, numbers.Real):
        return Polynomial([float(x)])
    return Polynomial(x)


@dataclass(frozen=True, eq=False)
class DelayRational:
    """``num(s) / den(s) * exp(-delay * s)`` in canonical form.

    Canonical form: exact common ``s`` factors removed, a numerator that is
    an exact multiple of the denominator collapsed to a constant, and the
    denominator scaled to be monic. The zero transfer function is ``0/1``
    with no delay. No approximate pole-zero cancellation is ever done.
    """

    num: Polynomial
    den: Polynomial
    delay: float = 0.0

    def __post_init__(self):
        num, den = _poly(self.num), _poly(self.den)
        delay = float(self.delay)
        if den.is_zero:
            raise ZeroDivisionError("transfer function denominator is identically zero")
        if not math.isfinite(delay) or delay < 0.0:
            raise ValueError(f"delay must be finite and >= 0, got {delay!r}")
        num, den, delay = _canonical(num, den, delay)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "delay", delay)

    # -- construction helpers --------------------------------------------
    @classmethod
    def gain(cls, k: float) -> "DelayRational":
        return cls(Polynomial([k]), Polynomial([1.0]))

    @classmethod
    def pure_delay(cls, tau: float) -> "DelayRational":
        return cls(Polynomial([1.0]), Polynomial([1.0]), tau)

    @classmethod
    def s(cls) -> "DelayRational":
        return cls(Polynomial.s(), Polynomial([1.0]))

    @classmethod
    def zero(cls) -> "DelayRational":
        return cls(Polynomial(), Polynomial([1.0]))

    # -- properties ------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_rational(self) -> bool:
        return self.delay == 0.0

    @property
    def is_proper(self) -> bool:
        return self.num.degree <= self.den.degree

    @property
    def is_biproper(self) -> bool:
        return not self.is_zero and self.num.degree == self.den.degree

    # -- evaluation ------------------------------------------------------
    def evaluate(self, omegas) -> np.ndarray:
        """Complex response at each angular frequency (rad/s)."""
        w = np.atleast_1d(np.asarray(omegas, dtype=np.float64))
        s = 1j * w
        den = self.den(s)
        bad = np.abs(den) < POLE_TOL
        if np.any(bad):
            raise PoleOnAxisError(
                f"evaluation on a pole at omega = {w[bad][0]!r} rad/s"
            )
        out = self.num(s) / den
        if self.delay:
            out = out * np.exp(-1j * w * self.delay)
        return out

    def __call__(self, s):
        """Evaluate at arbitrary complex ``s`` (delay included)."""
        s = np.asarray(s, dtype=np.complex128)
        out = self.num(s) / self.den(s)
        if self.delay:
            out = out * np.exp(-self.delay * s)
        return out

    # -- algebra ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, DelayRational):
            return other
        if isinstance(other, numbers.Real):
            return DelayRational.gain(float(other))
        if isinstance(other, Polynomial):
            return DelayRational(other, Polynomial([1.0]))
        return NotImplemented

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return tf_mul(self, other)

    __rmul__ = __mul__

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return tf_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return DelayRational(-self.num, self.den, self.delay)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return tf_add(self, -other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return tf_add(other, -self)

    def inverse(self) -> "DelayRational":
        if self.delay:
            raise NonzeroDelayError("cannot invert a transfer function with a transport lag")
        if self.is_zero:
            raise ZeroDivisionError("cannot invert the zero transfer function")
        return DelayRational(self.den, self.num)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return tf_mul(self, other.inverse())

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return tf_mul(other, self.inverse())

    def __eq__(self, other):
        if not isinstance(other, DelayRational):
            return NotImplemented
        return self.num == other.num and self.den == other.den and self.delay == other.delay

    def __hash__(self):
        return hash((self.num, self.den, self.delay))

    def __repr__(self):
        return (
            f"DelayRational(num={self.num.coeffs.tolist()}, "
            f"den={self.den.coeffs.tolist()}, delay={self.delay!r})"
        )

    # -- serialization ---------------------------------------------------
    def to_record(self) -> str:
        """``num_coeffs;den_coeffs;delay`` with 17 significant digits."""
        fmt = lambda xs: " ".join(f"{x:.17g}" for x in xs)  # noqa: E731
        return f"{fmt(self.num.coeffs)};{fmt(self.den.coeffs)};{self.delay:.17g}"

    @classmethod
    def from_record(cls, record: str) -> "DelayRational":
        parts = record.strip().split(";")
        if len(parts) != 3:
            raise ValueError(f"malformed transfer-function record: {record!r}")
        num = [float(x) for x in parts[0].split()]
        den = [float(x) for x in parts[1].split()]
        return cls(Polynomial(num), Polynomial(den), float(parts[2]))


def _canonical(num: Polynomial, den: Polynomial, delay: float):
    if num.is_zero:
        return Polynomial(), Polynomial([1.0]), 0.0
    k = min(num.low_order_zeros(), den.low_order_zeros())
    if k:
        num, den = num.shift_down(k), den.shift_down(k)
    lead = den.leading
    if lead != 1.0:
        num = Polynomial(num.coeffs / lead)
        den = Polynomial(den.coeffs / lead)
    if num.degree == den.degree and num.degree > 0:
        c = num.leading
        if np.array_equal(num.coeffs, c * den.coeffs):
            num, den = Polynomial([c]), Polynomial([1.0])
    return num, den, delay


def tf_mul(a: DelayRational, b: DelayRational) -> DelayRational:
    """Series connection: numerators and denominators multiply, delays add."""
    return DelayRational(a.num * b.num, a.den * b.den, a.delay + b.delay)


def tf_add(a: DelayRational, b: DelayRational) -> DelayRational:
    """Parallel connection of two transfer functions with the same delay."""
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if a.delay != b.delay:
        raise DelayMismatchError(
            f"cannot add transfer functions with delays {a.delay!r} and {b.delay!r}; "
            "rationalize both with pade_rationalize first"
        )
    if a.den == b.den:
        return DelayRational(a.num + b.num, a.den, a.delay)
    return DelayRational(a.num * b.den + b.num * a.den, a.den * b.den, a.delay)


def tf_feedback(g: DelayRational, h: DelayRational) -> DelayRational:
    """Negative-feedback closure ``g / (1 + g h)`` for rational ``g`` and ``h``."""
    if g.delay or h.delay:
        raise NonzeroDelayError(
            "tf_feedback needs delay-free operands; use pade_rationalize or a "
            "per-frequency closure"
        )
    den = g.den * h.den + g.num * h.num
    if den.is_zero:
        raise DegenerateFeedbackError("1 + g*h is identically zero")
    return DelayRational(g.num * h.den, den)


def pade_coefficients(tau: float, order: int) -> tuple[Polynomial, Polynomial]:
    """Diagonal ``[order/order]`` Padé approximant of ``exp(-tau s)``."""
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= PADE_MAX_ORDER:
        raise ValueError(f"Padé order must be an integer in [1, {PADE_MAX_ORDER}], got {order!r}")
    n = int(order)
    c = np.array([
        math.factorial(2 * n - k) * math.factorial(n)
        / (math.factorial(2 * n) * math.factorial(k) * math.factorial(n - k))
        for k in range(n + 1)
    ])
    powers = tau ** np.arange(n + 1)
    signs = (-1.0) ** np.arange(n + 1)
    return Polynomial(c * powers * signs), Polynomial(c * powers)


def pade_rationalize(tf: DelayRational, order: int) -> DelayRational:
    """Replace the transport lag of ``tf`` by its diagonal Padé approximant."""
    num, den = pade_coefficients(max(tf.delay, 0.0), order)
    if tf.delay == 0.0:
        return tf
    return DelayRational(tf.num * num, tf.den * den)


@dataclass(frozen=True)
class StabilityReport:
    poles: np.ndarray
    stable: bool
    marginal: bool

    def __iter__(self):
        # Unpacks as ``poles, stable``.
        yield self.poles
        yield self.stable


def poles_and_stability(tf: DelayRational) -> StabilityReport:
    """Denominator roots and strict left-half-plane test.

    Poles with ``|Re| <= 1e-9`` are flagged ``marginal`` and count as unstable.
    """
    if tf.delay:
        raise NonzeroDelayError(
            "a transport lag has infinitely many poles; rationalize with pade_rationalize first"
        )
    if tf.den.degree < 1:
        raise ValueError("denominator has no roots (degree 0)")
    poles = tf.den.roots()
    stable = bool(np.all(poles.real < -STABILITY_TOL))
    marginal = bool(np.any(np.abs(poles.real) <= STABILITY_TOL))
    return StabilityReport(poles=poles, stable=stable, marginal=marginal)


def dc_gain(tf: DelayRational) -> float:
    """Steady-state gain, ``±inf`` for an integrating transfer function."""
    num, den = tf.num, tf.den
    if num.is_zero:
        return 0.0
    k = min(num.low_order_zeros(), den.low_order_zeros())
    num, den = num.shift_down(k), den.shift_down(k)
    n0, d0 = float(num.coeffs[0]), float(den.coeffs[0])
    if d0 == 0.0:
        return math.copysign(math.inf, n0)
    return n0 / d0


def freq_eval(tf: DelayRational, omega: float) -> complex:
    """Response at a single angular frequency ``omega > 0`` (rad/s)."""
    if not math.isfinite(omega) or omega <= 0.0:
        raise ValueError(f"omega must be finite and positive, got {omega!r}")
    return complex(tf.evaluate(np.array([omega]))[0])
