"""Numerical engine for θ-Bernoulli walk ensembles."""
from . import errors, harness, lattice, loopcheck, sampler, surface, symfun, transfer, variational, weights

__all__ = [
    "errors", "harness", "lattice", "loopcheck", "sampler", "surface",
    "symfun", "transfer", "variational", "weights",
]
