import math
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from utils.exact import ScalarField, is_integral


# Pydantic Schemas
class YoungDiagram(BaseModel):
    """Weakly decreasing partition; trailing zero rows are dropped."""
    model_config = ConfigDict(frozen=True)

    rows: Tuple[int, ...] = ()

    @field_validator("rows", mode="before")
    @classmethod
    def _normalize(cls, rows):
        rows = tuple(int(r) for r in rows)
        if any(r < 0 for r in rows):
            raise ValueError(f"rows must be non-negative, got {rows}")
        if any(rows[i] < rows[i + 1] for i in range(len(rows) - 1)):
            raise ValueError(f"rows must be weakly decreasing, got {rows}")
        while rows and rows[-1] == 0:
            rows = rows[:-1]
        return rows

    @property
    def length(self) -> int:
        return len(self.rows)

    @property
    def size(self) -> int:
        return sum(self.rows)

    def row(self, i: int) -> int:
        """Row i (0-based), zero past the end"""
        return self.rows[i] if i < len(self.rows) else 0

    def transpose(self) -> "YoungDiagram":
        if not self.rows:
            return YoungDiagram(rows=())
        return YoungDiagram(rows=tuple(sum(1 for r in self.rows if r > j) for j in range(self.rows[0])))

    def contains(self, other: "YoungDiagram") -> bool:
        return other.length <= self.length and all(self.row(i) >= other.row(i) for i in range(other.length))


class ParticleConfig(BaseModel):
    """N points x_1 > ... > x_N with gaps in θ + Z_{≥0}."""
    model_config = ConfigDict(frozen=True)

    positions: Tuple[ScalarField, ...]
    theta: ScalarField

    @model_validator(mode="after")
    def _check_lattice(self):
        if not self.positions:
            raise ValueError("a configuration needs at least one particle")
        if self.theta <= 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        for i in range(len(self.positions) - 1):
            excess = self.positions[i] - self.positions[i + 1] - self.theta
            negative = excess < 0 and not math.isclose(float(excess), 0.0, abs_tol=1e-9)
            if negative or not is_integral(excess):
                raise ValueError(
                    f"gap x_{i + 1} - x_{i + 2} = {self.positions[i] - self.positions[i + 1]} "
                    f"is not in theta + Z>=0 (theta={self.theta})"
                )
        return self

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def offset(self) -> float:
        """Global real offset of x_1 (its fractional part)"""
        return float(self.positions[0]) - math.floor(float(self.positions[0]))

    def as_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.positions])


class WalkEnsemble(BaseModel):
    """T+1 configurations joined by feasible Bernoulli steps."""
    model_config = ConfigDict(frozen=True)

    steps: Tuple[ParticleConfig, ...]
    theta: ScalarField

    @model_validator(mode="after")
    def _check_steps(self):
        if not self.steps:
            raise ValueError("an ensemble needs at least one configuration")
        n = self.steps[0].n
        for t, cfg in enumerate(self.steps):
            if cfg.n != n or cfg.theta != self.theta:
                raise ValueError(f"configuration at t={t} does not share N={n} and theta={self.theta}")
        for t in range(len(self.steps) - 1):
            a, b = self.steps[t], self.steps[t + 1]
            e = []
            for i in range(n):
                d = b.positions[i] - a.positions[i]
                if is_integral(d) and round(d) in (0, 1):
                    e.append(int(round(d)))
                else:
                    raise ValueError(f"particle {i + 1} moves by {d} between t={t} and t={t + 1}")
            for i in range(n - 1):
                gap = a.positions[i] - a.positions[i + 1]
                if e[i] == 0 and e[i + 1] == 1 and math.isclose(float(gap), float(self.theta), abs_tol=1e-9):
                    raise ValueError(f"infeasible step at t={t}: packed pair {i + 1},{i + 2} with e=(0,1)")
        return self

    @property
    def horizon(self) -> int:
        return len(self.steps) - 1

    @property
    def n(self) -> int:
        return self.steps[0].n

    def step_vectors(self) -> List[Tuple[int, ...]]:
        return [
            tuple(int(round(b.positions[i] - a.positions[i])) for i in range(a.n))
            for a, b in zip(self.steps[:-1], self.steps[1:])
        ]

    def positions_array(self) -> np.ndarray:
        """(T+1, N) float array"""
        return np.array([[float(p) for p in cfg.positions] for cfg in self.steps])


class GridSpec(BaseModel):
    """Uniform grid of rescaled nodes (x_min + i*dx, j*dt)."""
    model_config = ConfigDict(frozen=True)

    x_min: float
    dx: float = Field(gt=0)
    nx: int = Field(ge=2)
    dt: float = Field(gt=0)
    nt: int = Field(ge=1)

    @property
    def xs(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    @property
    def ts(self) -> np.ndarray:
        return self.dt * np.arange(self.nt)


class HeightField(BaseModel):
    """Rescaled height H[i, j] at (x_min + i*dx, j*dt)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: np.ndarray
    x_min: float
    dx: float
    dt: float
    theta: float
    t_horizon: float
    n_scale: int = 1
    coarse: bool = False

    @field_validator("grid")
    @classmethod
    def _freeze(cls, grid):
        grid = np.array(grid, dtype=float)
        if grid.ndim != 2:
            raise ValueError("height grid must be two-dimensional")
        grid.setflags(write=False)
        return grid

    @property
    def xs(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.grid.shape[0])

    @property
    def ts(self) -> np.ndarray:
        return self.dt * np.arange(self.grid.shape[1])

    def column(self, t: float) -> np.ndarray:
        """Height profile at rescaled time t, linear in time between columns"""
        pos = t / self.dt
        j = int(math.floor(pos + 1e-12))
        last = self.grid.shape[1] - 1
        if j >= last:
            return self.grid[:, last]
        if j < 0:
            return self.grid[:, 0]
        frac = pos - j
        if frac <= 1e-12:
            return self.grid[:, j]
        return (1 - frac) * self.grid[:, j] + frac * self.grid[:, j + 1]


class BoundaryProfile(BaseModel):
    """Piecewise-linear monotone height profile through (xs[k], h[k])."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xs: np.ndarray
    h: np.ndarray
    theta: float

    @model_validator(mode="after")
    def _check(self):
        xs = np.asarray(self.xs, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if xs.shape != h.shape or xs.ndim != 1 or xs.size < 2:
            raise ValueError("profile needs matching 1-D xs and h with at least two nodes")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("profile nodes must be strictly increasing")
        slopes = np.diff(h) / np.diff(xs)
        if np.any(slopes < -1e-9) or np.any(slopes > 1 + 1e-9):
            raise ValueError("profile density must lie in [0, 1]")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "h", h)
        return self

    @property
    def mass(self) -> float:
        return float(self.h[-1] - self.h[0])

    def density(self) -> np.ndarray:
        return np.clip(np.diff(self.h) / np.diff(self.xs), 0.0, 1.0)

    def at(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.xs, self.h, left=self.h[0], right=self.h[-1])
