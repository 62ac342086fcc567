from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from models.lattice import BoundaryProfile, HeightField


# Pydantic Schemas
class AdmissibleGridField(BaseModel):
    """Height field on a square-cell grid (dx = dt) with fixed boundary rows."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    H: np.ndarray
    x_min: float
    dx: float
    dt: float
    theta: float
    h0: BoundaryProfile
    hT: BoundaryProfile

    @field_validator("H")
    @classmethod
    def _freeze(cls, H):
        H = np.array(H, dtype=float)
        if H.ndim != 2 or H.shape[0] < 2 or H.shape[1] < 2:
            raise ValueError("grid field needs at least 2x2 nodes")
        H.setflags(write=False)
        return H

    @model_validator(mode="after")
    def _square_cells(self):
        if abs(self.dx - self.dt) > 1e-12 * max(self.dx, self.dt):
            raise ValueError(f"solver grids need dx == dt, got dx={self.dx} dt={self.dt}")
        return self

    @property
    def xs(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.H.shape[0])

    @property
    def ts(self) -> np.ndarray:
        return self.dt * np.arange(self.H.shape[1])

    @property
    def horizon(self) -> float:
        return self.dt * (self.H.shape[1] - 1)

    def to_height_field(self, n_scale: int = 1) -> HeightField:
        return HeightField(
            grid=self.H, x_min=self.x_min, dx=self.dx, dt=self.dt, theta=self.theta,
            t_horizon=self.horizon, n_scale=n_scale,
        )


class RateReport(BaseModel):
    """Terms of the rate functional for one field; I is relative to the solver optimum."""
    model_config = ConfigDict(frozen=True)

    entropy_term: float
    free_entropy_0: float
    free_entropy_T: float
    free_entropy_term: float
    drift_term: float = 0.0
    J_value: float
    sup_value: float
    J_min: Optional[float] = None
    I_value: Optional[float] = None
    converged: bool = True
    iterations: int = 0
    history: Tuple[Tuple[int, float], ...] = ()
    tolerances: Dict[str, float] = {}
