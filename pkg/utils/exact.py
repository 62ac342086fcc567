"""Exact/float scalar helpers.

Values are either ``fractions.Fraction`` (exact mode, used whenever θ or a
weight parameter is supplied as an integer, a rational or a string) or plain
``float``. Mixing the two degrades to float, which is what Python does anyway.
"""
import math
from fractions import Fraction
from numbers import Integral, Real
from typing import Annotated, Any, Union

import numpy as np
from pydantic import BeforeValidator, PlainSerializer

from config import settings

Scalar = Union[Fraction, float]


def as_scalar(value: Any) -> Scalar:
    """Coerce user input to an exact Fraction or a float"""
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers here")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (Integral, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse number {value!r}") from exc
    if isinstance(value, (Real, np.floating)):
        out = float(value)
        if not math.isfinite(out):
            raise ValueError(f"non-finite number {value!r}")
        return out
    raise ValueError(f"unsupported number type {type(value).__name__}")


def is_exact(*values: Any) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def is_integral(value: Scalar, tol: float = None) -> bool:
    if isinstance(value, Fraction):
        return value.denominator == 1
    tol = settings.LATTICE_TOL if tol is None else tol
    return abs(value - round(value)) <= tol


def nearest_int(value: Scalar) -> int:
    return int(round(value))


def log_abs(value: Scalar) -> float:
    """ln|value| that also works for Fractions too large for a float"""
    if isinstance(value, Fraction):
        if value == 0:
            return -math.inf
        return math.log(abs(value.numerator)) - math.log(value.denominator)
    if value == 0:
        return -math.inf
    return math.log(abs(value))


def sign(value: Scalar) -> int:
    return (value > 0) - (value < 0)


def format_scalar(value: Scalar) -> str:
    """17-significant-digit decimal for floats, p/q for rationals"""
    if isinstance(value, Fraction):
        return str(value)
    return format(float(value), ".17g")


def _json_scalar(value: Scalar) -> Union[str, float]:
    if isinstance(value, Fraction):
        return str(value)
    return float(value)


ScalarField = Annotated[
    Any,
    BeforeValidator(as_scalar),
    PlainSerializer(_json_scalar, when_used="json"),
]
