import cmath
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.lattice import ParticleConfig


# Pydantic Schemas
class AnalyticWeight(BaseModel):
    """φ(z) presets: constant c0, polynomial Σ c_k z^k, exponential c0·e^{c1 z}."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant", "polynomial", "exponential"] = "constant"
    coefficients: Tuple[float, ...] = (1.0,)

    @model_validator(mode="after")
    def _shape(self):
        if not self.coefficients:
            raise ValueError("at least one coefficient is required")
        if self.kind == "exponential" and len(self.coefficients) != 2:
            raise ValueError("exponential weights take (c0, c1)")
        return self

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        c = self.coefficients
        if self.kind == "constant":
            return np.full_like(z, c[0])
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(z, c)
        return c[0] * np.exp(c[1] * z)

    @property
    def is_zero(self) -> bool:
        if self.kind == "exponential":
            return self.coefficients[0] == 0
        return all(c == 0 for c in self.coefficients)


class ConformalMap(BaseModel):
    """b(z) = z or b(z) = q^z."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["identity", "q"] = "identity"
    q: Optional[float] = Field(default=None, gt=0, lt=1)

    @model_validator(mode="after")
    def _needs_q(self):
        if self.kind == "q" and self.q is None:
            raise ValueError("the q^z map needs q")
        return self

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "identity":
            return z
        return np.exp(z * np.log(self.q))

    @property
    def injectivity_radius(self) -> float:
        """Half the imaginary period of q^z; infinite for the identity"""
        if self.kind == "identity":
            return float("inf")
        return cmath.pi / abs(np.log(self.q))


class LoopSetup(BaseModel):
    """Configuration, map and weights of one general-kernel step."""
    model_config = ConfigDict(frozen=True)

    x: ParticleConfig
    b_map: ConformalMap = ConformalMap()
    phi_plus: AnalyticWeight = AnalyticWeight()
    phi_minus: AnalyticWeight = AnalyticWeight()
    label: str = ""

    @property
    def theta(self) -> float:
        return float(self.x.theta)

    @property
    def n(self) -> int:
        return self.x.n


class LoopReport(BaseModel):
    """Residues of the loop observable around each particle and on two enclosing circles."""
    model_config = ConfigDict(frozen=True)

    label: str
    n: int
    theta: float
    b_map: str
    residues: Tuple[float, ...]
    max_residue: float
    enclosing: Tuple[float, float]
    deformation_gap: float
    tolerance: float
    passed: bool


class LoopCorpusReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    count: int
    reports: Tuple[LoopReport, ...]
    max_residue: float
    max_deformation_gap: float
    tolerance: float
    passed: bool
