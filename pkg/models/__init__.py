from .base import Base
from .run import RunConfig, RunRecord, RunStatus

__all__ = ["Base", "RunConfig", "RunRecord", "RunStatus"]
