"""Parameter validation shared by the model dataclasses."""
from __future__ import annotations

import math


class ParameterError(ValueError):
    """Invalid model parameters; ``violations`` lists every broken constraint."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _real(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return [f"{name}: expected a number, got {value!r}"]
    if not math.isfinite(value):
        return [f"{name}: must be finite, got {value!r}"]
    return []


def check_positive(name, value) -> list[str]:
    errs = _real(name, value)
    if not errs and value <= 0:
        errs.append(f"{name}: must be > 0, got {value!r}")
    return errs


def check_nonnegative(name, value) -> list[str]:
    errs = _real(name, value)
    if not errs and value < 0:
        errs.append(f"{name}: must be >= 0, got {value!r}")
    return errs


def check_finite(name, value) -> list[str]:
    return _real(name, value)
