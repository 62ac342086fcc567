import cmath
import math

from pydantic import BaseModel, ConfigDict, model_validator

BOUNDARY_TOL = 1e-12


# Pydantic Schemas
class Slope(BaseModel):
    """Gradient (s, t) = (∂_x H, ∂_t H) in the closed triangle s ∈ [0,1], t ≤ 0, s + t ≥ 0."""
    model_config = ConfigDict(frozen=True)

    s: float
    t: float

    @model_validator(mode="after")
    def _in_triangle(self):
        if self.s > 1 + BOUNDARY_TOL or self.t > BOUNDARY_TOL or self.s + self.t < -BOUNDARY_TOL:
            raise ValueError(f"slope ({self.s}, {self.t}) lies outside the slope triangle")
        return self

    def margin(self) -> float:
        """Distance-like margin to the boundary: min(1 − s, −t, s + t)"""
        return min(1 - self.s, -self.t, self.s + self.t)

    def is_interior(self, eta: float = 0.0) -> bool:
        return self.margin() > eta


class ComplexSlope(BaseModel):
    model_config = ConfigDict(frozen=True)

    f_real: float
    f_imag: float

    @model_validator(mode="after")
    def _lower_half_plane(self):
        if self.f_imag > BOUNDARY_TOL:
            raise ValueError(f"complex slope must lie in the closed lower half-plane, got imag={self.f_imag}")
        return self

    @property
    def f(self) -> complex:
        return complex(self.f_real, self.f_imag)

    def slope(self) -> Slope:
        """Recover (∂_x H, ∂_t H) from arg f = −π∂_x H and arg(f + 1) = π∂_t H"""
        return Slope(s=-cmath.phase(self.f) / math.pi, t=cmath.phase(self.f + 1) / math.pi)


class SmoothedDrift(BaseModel):
    """Smoothed translating-ramp data at one space-time point."""
    model_config = ConfigDict(frozen=True)

    kappa: float
    hilbert: float
    g: float
    f_real: float
    f_imag: float
    m_real: float
    m_imag: float

    @property
    def f(self) -> complex:
        return complex(self.f_real, self.f_imag)

    @property
    def m(self) -> complex:
        return complex(self.m_real, self.m_imag)
