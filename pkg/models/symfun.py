import math
from fractions import Fraction
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from utils.exact import Scalar, ScalarField, log_abs, sign


# Pydantic Schemas
class QParams(BaseModel):
    """Macdonald parameters with t = q^θ."""
    model_config = ConfigDict(frozen=True)

    q: float = Field(gt=0, lt=1)
    theta: float = Field(gt=0)

    @property
    def t(self) -> float:
        return self.q ** self.theta

    @classmethod
    def from_kappa(cls, kappa: float, n: int, theta: float) -> "QParams":
        """q = e^{κ/N}"""
        return cls(q=math.exp(kappa / n), theta=theta)


class PolyValue(BaseModel):
    """Signed log-space value with an optional exact rational."""
    model_config = ConfigDict(frozen=True)

    log_value: float
    sign: int = Field(ge=-1, le=1)
    exact: Optional[ScalarField] = None

    @model_validator(mode="after")
    def _agree(self):
        if self.exact is not None and self.exact != 0:
            if not math.isclose(log_abs(self.exact), self.log_value, rel_tol=1e-12, abs_tol=1e-12):
                raise ValueError(f"exact value {self.exact} disagrees with log_value {self.log_value}")
        return self

    @classmethod
    def from_scalar(cls, value: Scalar, keep_exact: bool = True) -> "PolyValue":
        exact = value if keep_exact and isinstance(value, Fraction) else None
        return cls(log_value=log_abs(value), sign=sign(value), exact=exact)

    @classmethod
    def zero(cls) -> "PolyValue":
        return cls(log_value=-math.inf, sign=0, exact=0)

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_value)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0
