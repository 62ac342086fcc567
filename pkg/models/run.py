from sqlalchemy import Column, Integer, String, DateTime, Text, BigInteger
from sqlalchemy.sql import func
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Any, Dict, List, Literal, Optional, Tuple, Type
from datetime import datetime
import hashlib
import enum
import json
from .base import Base

CONFIG_VERSION = "1"

COMMANDS = (
    "sample", "exact-dist", "verify-ldp", "verify-jack", "verify-macdonald",
    "limit-shape", "rate", "jack", "macdonald", "surface-tension", "loop-check",
)


# Enum for run status
class RunStatus(str, enum.Enum):
    PASSED = "passed"
    FAILED = "failed"
    ERROR = "error"


# SQLAlchemy Model
class RunRecord(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String, nullable=False, index=True)
    config_hash = Column(String(64), nullable=False, index=True)
    seed = Column(BigInteger, nullable=False, default=0)
    status = Column(String, default=RunStatus.PASSED, index=True)
    verdict = Column(Text, nullable=True)
    report = Column(Text, nullable=False)
    created_at = Column(DateTime(timezone=True), server_default=func.now())


# Pydantic Schemas
class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProfileSpec(_Params):
    """Boundary profile through (xs[k], h[k])"""
    xs: List[float]
    h: List[float]


class SampleParams(_Params):
    n: int = Field(ge=1)
    theta: str = "1"
    T: int = Field(ge=0)
    start: List[int] = []
    end: Optional[List[int]] = None
    method: Literal["forward", "mcmc"] = "forward"
    sweeps: int = Field(default=1000, ge=1)
    b: str = "1"
    mode: Literal["plain", "q"] = "plain"
    kappa: Optional[float] = Field(default=None, lt=0)


class ExactDistParams(_Params):
    n: int = Field(ge=1)
    theta: str = "1"
    T: int = Field(ge=0)
    start: List[int] = []
    end: List[int]
    b: str = "1"
    mode: Literal["plain", "q"] = "plain"
    kappa: Optional[float] = Field(default=None, lt=0)


class VerifyLdpParams(_Params):
    theta: str = "1"
    schedule: List[int] = [4, 6, 8]
    eps: float = Field(default=0.25, gt=0)
    horizon: float = Field(default=2.0, gt=0)
    speed: float = Field(default=0.5, ge=0, le=1)
    grid_steps: Optional[int] = Field(default=None, ge=2)


class VerifyJackParams(_Params):
    theta: str = "1"
    schedule: List[int] = [4, 6, 8]
    drift: List[float] = []
    grid_steps: Optional[int] = Field(default=None, ge=2)


class VerifyMacdonaldParams(VerifyJackParams):
    kappas: Tuple[float, float] = (-0.5, -2.0)

    @field_validator("kappas")
    @classmethod
    def _negative(cls, kappas):
        if any(k >= 0 for k in kappas):
            raise ValueError(f"kappa must be negative, got {kappas}")
        return kappas


class LimitShapeParams(_Params):
    h0: ProfileSpec
    hT: ProfileSpec
    T: float = Field(gt=0)
    theta: Optional[float] = Field(default=None, gt=0)
    drift: List[float] = []
    grid_steps: Optional[int] = Field(default=None, ge=2)
    start: Literal["mid", "upper", "lower"] = "mid"


class RateParams(_Params):
    """Rate of a translating ramp, or of a height field read from CSV"""
    theta: float = Field(default=1.0, gt=0)
    T: float = Field(default=1.0, gt=0)
    rho: float = Field(default=0.5, gt=0, le=1)
    speed: float = Field(default=0.5, ge=0, le=1)
    field_csv: Optional[str] = None
    drift: List[float] = []
    grid_steps: Optional[int] = Field(default=None, ge=2)


class JackParams(_Params):
    lam: List[int]
    mu: List[int] = []
    n: int = Field(ge=1)
    theta: str = "1"
    b: List[str] = []


class MacdonaldParams(_Params):
    lam: List[int]
    mu: List[int] = []
    n: int = Field(ge=1)
    theta: float = Field(default=1.0, gt=0)
    q: Optional[float] = Field(default=None, gt=0, lt=1)
    kappa: Optional[float] = Field(default=None, lt=0)
    b: List[float] = []

    @model_validator(mode="after")
    def _one_of_q_kappa(self):
        if (self.q is None) == (self.kappa is None):
            raise ValueError("give exactly one of q and kappa")
        return self


class SurfaceParams(_Params):
    slopes: List[Tuple[float, float]]
    gradient: bool = False


class LoopCheckParams(_Params):
    count: int = Field(default=50, ge=1)
    n_max: int = Field(default=6, ge=1)
    maps: List[Literal["identity", "q"]] = ["identity", "q"]
    tolerance: float = Field(default=1e-9, gt=0)


PARAMS: Dict[str, Type[_Params]] = {
    "sample": SampleParams,
    "exact-dist": ExactDistParams,
    "verify-ldp": VerifyLdpParams,
    "verify-jack": VerifyJackParams,
    "verify-macdonald": VerifyMacdonaldParams,
    "limit-shape": LimitShapeParams,
    "rate": RateParams,
    "jack": JackParams,
    "macdonald": MacdonaldParams,
    "surface-tension": SurfaceParams,
    "loop-check": LoopCheckParams,
}


class RunConfig(BaseModel):
    """Replayable description of one command run."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    version: str
    command: Literal[COMMANDS]
    seed: int = Field(default=0, ge=0, lt=2 ** 63)
    output_dir: Optional[str] = None
    format: Literal["json", "csv", "jsonl"] = "json"
    params: Dict[str, Any] = {}

    @field_validator("version")
    @classmethod
    def _known_version(cls, version):
        if version != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {version!r}; expected {CONFIG_VERSION!r}")
        return version

    @model_validator(mode="after")
    def _check_params(self):
        PARAMS[self.command].model_validate(self.params)
        return self

    def typed_params(self) -> _Params:
        return PARAMS[self.command].model_validate(self.params)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


class RunCreate(BaseModel):
    command: str
    config_hash: str
    seed: int = 0
    status: RunStatus = RunStatus.PASSED
    verdict: Optional[str] = None
    report: Dict[str, Any] = {}


class RunResponse(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    id: int
    command: str
    config_hash: str
    seed: int
    status: str
    verdict: Optional[str] = None
    report: Dict[str, Any]
    created_at: Optional[datetime] = None

    @field_validator("report", mode="before")
    @classmethod
    def _decode(cls, report):
        return json.loads(report) if isinstance(report, str) else report


class RunStats(BaseModel):
    total_runs: int
    by_command: Dict[str, int]
    by_status: Dict[str, int]


class DiagramRequest(BaseModel):
    rows: List[int] = []
    n: int = Field(ge=1)
    theta: str = "1"


class KernelRequest(BaseModel):
    """One-step law at a configuration given by its diagram"""
    rows: List[int] = []
    n: int = Field(ge=1)
    theta: str = "1"
    b: str = "1"
    mode: Literal["plain", "q"] = "plain"
    kappa: Optional[float] = Field(default=None, lt=0)


class CommandResponse(BaseModel):
    command: str
    config_hash: str
    passed: bool
    verdict: str
    report: Dict[str, Any]
    run_id: Optional[int] = None
