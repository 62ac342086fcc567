"""Exceptions raised by the walk-ensemble engine.

Every error is a ``ValueError`` so callers that only care about bad input can
catch that; the HTTP layer maps ``WalkError`` to 400 and the CLI to exit code 1.
"""
from typing import Dict, Optional


class WalkError(ValueError):
    """Base class for engine errors"""


class LatticeError(WalkError):
    """Configuration outside the θ-lattice, too many rows, or mismatched N/θ"""


class InfeasibleEndpointsError(WalkError):
    """No walk connects the requested endpoints in the given time"""


class EnumerationCapError(WalkError):
    """N is above the {0,1}^N enumeration cap"""


class StateExplosionError(WalkError):
    """Transfer-matrix state count exceeded the configured cap"""

    def __init__(self, message: str, counts: Optional[Dict[int, int]] = None):
        super().__init__(message)
        self.counts = counts or {}


class SlopeDomainError(WalkError):
    """Slope outside the triangle, or too close to its boundary for a gradient"""


class SolverError(WalkError):
    """Boundary data admits no admissible extension"""


class ConsistencyError(WalkError):
    """Two independent evaluations of the same quantity disagree"""


class PoleError(WalkError):
    """Evaluation point sits on a pole"""
