"""Exact rational arithmetic helpers.

gmpy2.mpq is used as the rational number type throughout the exact code
paths (roughly an order of magnitude faster than fractions.Fraction).
Fraction is still used for float rationalization, which mpq lacks.
"""

from __future__ import annotations

from fractions import Fraction

from gmpy2 import mpq

Q = mpq

QZERO = mpq(0)
QONE = mpq(1)


def qstr(x) -> str:
    """Serialize a rational as "p/q" (denominator always explicit)."""
    x = mpq(x)
    return f"{x.numerator}/{x.denominator}"


def qparse(s) -> mpq:
    """Parse "p/q", "p", int, or float-as-string into an exact rational."""
    if isinstance(s, str):
        return mpq(Fraction(s))
    if isinstance(s, (int, mpq)):
        return mpq(s)
    if isinstance(s, Fraction):
        return mpq(s)
    raise TypeError(f"cannot parse rational from {type(s).__name__}")


def from_float_exact(x: float) -> mpq:
    """Exact dyadic rational equal to the binary float x."""
    return mpq(Fraction(x))


def rationalize(x: float, max_denominator: int = 10**6) -> tuple[mpq, float]:
    """Closest rational with bounded denominator, plus the conversion error."""
    f = Fraction(x).limit_denominator(max_denominator)
    return mpq(f), abs(float(f) - x)


def is_rational(x) -> bool:
    return isinstance(x, (int, mpq, Fraction))
