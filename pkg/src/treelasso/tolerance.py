"""Floating-point comparison policy shared across the package.

Distances are 64-bit floats.  All equality/inequality decisions on them go
through the two helpers below, which use a tolerance relative to the
magnitudes involved (never smaller than the absolute epsilon).  The default
epsilon can be overridden per call; the CLI additionally honours the
LASSO_EPSILON environment variable.
"""

from __future__ import annotations

DEFAULT_EPSILON = 1e-9


def _scale(*values: float) -> float:
    return max(1.0, *(abs(v) for v in values))


def approx_equal(x: float, y: float, eps: float = DEFAULT_EPSILON) -> bool:
    """True when x and y differ by at most eps relative to their magnitude."""
    return abs(x - y) <= eps * _scale(x, y)


def definitely_less(x: float, y: float, eps: float = DEFAULT_EPSILON) -> bool:
    """True when x < y with a margin exceeding the tolerance.

    Used for strict-inequality triggers that must not fire on float noise.
    For exact number types (e.g. Fraction) pass eps=0.
    """
    if eps == 0:
        return x < y
    return x < y - eps * _scale(x, y)
