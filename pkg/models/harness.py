from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict


# Pydantic Schemas
class PrincipalPoint(BaseModel):
    """(1/N²) ln of a principal specialization next to its limit."""
    model_config = ConfigDict(frozen=True)

    n: int
    value: float
    limit: float


class TrendReport(BaseModel):
    """Finite-N values against an asymptotic target along a schedule of N."""
    model_config = ConfigDict(frozen=True)

    command: str
    theta: float
    kappa: Optional[float] = None
    schedule: Tuple[int, ...]
    values: Tuple[float, ...]
    target: float
    gaps: Tuple[float, ...]
    decreasing: bool
    principal: Tuple[PrincipalPoint, ...] = ()
    notes: Tuple[str, ...] = ()
    tolerances: Dict[str, float] = {}

    @property
    def passed(self) -> bool:
        return self.decreasing


class KappaComparison(BaseModel):
    """Two Macdonald trends at different κ and the gap between them per N."""
    model_config = ConfigDict(frozen=True)

    first: TrendReport
    second: TrendReport
    schedule: Tuple[int, ...]
    gaps: Tuple[float, ...]
    converging: bool

    @property
    def passed(self) -> bool:
        return self.first.passed and self.second.passed and self.converging
