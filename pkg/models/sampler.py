from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from models.lattice import WalkEnsemble
from utils.exact import ScalarField


# Pydantic Schemas
class TransferState(BaseModel):
    """One reachable configuration at a fixed time and its mass."""
    model_config = ConfigDict(frozen=True)

    config_index: int
    config_key: str
    positions: Tuple[ScalarField, ...]
    mass: ScalarField


class ExactDistribution(BaseModel):
    """Forward-backward output: per-time conditional marginals and the event mass."""
    model_config = ConfigDict(frozen=True)

    horizon: int
    n: int
    mode: str
    exact: bool
    log_total: float
    total: Optional[ScalarField] = None
    marginals: Tuple[Tuple[TransferState, ...], ...]
    layer_sizes: Tuple[int, ...]

    @property
    def probability(self) -> float:
        return float(np.exp(self.log_total))


class McmcState(BaseModel):
    model_config = ConfigDict(frozen=True)

    ensemble: WalkEnsemble
    log_weight: float
    rng_seed: int
    sweep_count: int = Field(ge=0)


class ChainSummary(BaseModel):
    """Statistics of one MCMC chain after burn-in."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    chain: int
    final: McmcState
    proposed: int
    accepted: int
    infeasible: int
    recorded_sweeps: int
    path_counts: Dict[str, int] = {}
    mean_height: Optional[np.ndarray] = None

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0
