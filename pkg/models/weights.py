import math
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, ConfigDict, field_validator

from utils.exact import ScalarField, as_scalar


# Pydantic Schemas
class StepWeight(BaseModel):
    """Vandermonde ratio of one step; zero exactly when infeasible."""
    model_config = ConfigDict(frozen=True)

    value: ScalarField
    log_value: float
    feasible: bool

    @classmethod
    def infeasible(cls) -> "StepWeight":
        return cls(value=0, log_value=-math.inf, feasible=False)


class PathWeight(BaseModel):
    model_config = ConfigDict(frozen=True)

    log_value: float
    feasible: bool
    exact: Optional[ScalarField] = None


class DriftFunction(BaseModel):
    """Polynomial drift f(s) = Σ_k c_k s^k."""
    model_config = ConfigDict(frozen=True)

    coefficients: Tuple[float, ...] = (0.0,)

    @classmethod
    def constant(cls, c: float) -> "DriftFunction":
        return cls(coefficients=(float(c),))

    @property
    def polynomial(self) -> Polynomial:
        return Polynomial(self.coefficients)

    def value(self, s):
        return self.polynomial(s)

    def derivative(self, s):
        return self.polynomial.deriv()(s)

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coefficients)


class DriftProfile(BaseModel):
    """Per-step drifts b_0..b_{T-1}."""
    model_config = ConfigDict(frozen=True)

    b: Tuple[ScalarField, ...]
    f: Optional[DriftFunction] = None

    @field_validator("b")
    @classmethod
    def _positive(cls, b):
        if any(v <= 0 for v in b):
            raise ValueError(f"drifts must be positive, got {b}")
        return b

    @property
    def horizon(self) -> int:
        return len(self.b)

    @classmethod
    def ones(cls, T: int) -> "DriftProfile":
        return cls(b=(as_scalar(1),) * T)

    @classmethod
    def constant(cls, b, T: int) -> "DriftProfile":
        return cls(b=(as_scalar(b),) * T)

    @classmethod
    def from_function(cls, f: DriftFunction, T: int, n_scale: int) -> "DriftProfile":
        """b_t = exp(f(t/N)) for t = 0..T-1"""
        s = np.arange(T) / n_scale
        return cls(b=tuple(float(v) for v in np.exp(f.value(s))), f=f)


class RatioBounds(BaseModel):
    max_ratio: float
    min_ratio: float
    fitted_c: float
    configs: int
    n_max: int
