"""Seeded random corpora for identity checks, oracles and the loop-equation test."""
import logging
from fractions import Fraction
from itertools import product
from typing import Iterator, List, Sequence

import numpy as np

from models.lattice import ParticleConfig, YoungDiagram
from models.loop import AnalyticWeight, ConformalMap, LoopSetup
from utils.exact import as_scalar

logger = logging.getLogger("ThetaWalks")

DEFAULT_THETAS = ("1/3", "1/2", "1", "2", "7/3")
LOOP_THETAS = ("1/2", "1", "2")
Q_RANGE = (0.8, 0.95)


def random_config(rng: np.random.Generator, n: int, theta, max_extra: int = 3) -> ParticleConfig:
    """x_1 integral, gaps θ + U{0..max_extra}, x_N ≥ 0"""
    theta = as_scalar(theta)
    extras = rng.integers(0, max_extra + 1, size=n - 1)
    span = (n - 1) * theta + int(extras.sum())
    top = int(np.ceil(float(span)))
    positions = [Fraction(top) if isinstance(theta, Fraction) else float(top)]
    for extra in extras:
        positions.append(positions[-1] - theta - int(extra))
    return ParticleConfig(positions=tuple(positions), theta=theta)


def config_corpus(count: int, seed: int, n_max: int = 12, thetas: Sequence = DEFAULT_THETAS) -> List[ParticleConfig]:
    rng = np.random.default_rng(seed)
    corpus = [
        random_config(rng, int(rng.integers(1, n_max + 1)), thetas[int(rng.integers(len(thetas)))])
        for _ in range(count)
    ]
    logger.debug(f"DataGen: configurations generated - count={count} seed={seed}")
    return corpus


def diagrams_in_box(rows: int, cols: int) -> Iterator[YoungDiagram]:
    """Every partition fitting in a rows × cols box, the empty one first"""
    for parts in product(range(cols + 1), repeat=rows):
        if all(parts[i] >= parts[i + 1] for i in range(rows - 1)):
            yield YoungDiagram(rows=parts)


def random_weight(rng: np.random.Generator) -> AnalyticWeight:
    """Positive on [0, ∞): constant, quadratic with non-negative coefficients, or a mild exponential"""
    kind = ("constant", "polynomial", "exponential")[int(rng.integers(3))]
    c0 = float(rng.uniform(0.5, 2.0))
    if kind == "constant":
        return AnalyticWeight(kind=kind, coefficients=(c0,))
    if kind == "polynomial":
        return AnalyticWeight(kind=kind, coefficients=(c0, float(rng.uniform(0, 0.3)), float(rng.uniform(0, 0.05))))
    return AnalyticWeight(kind=kind, coefficients=(c0, float(rng.uniform(-0.3, 0.3))))


def random_loop_setup(
    rng: np.random.Generator,
    n_max: int = 6,
    thetas: Sequence = LOOP_THETAS,
    maps: Sequence[str] = ("identity", "q"),
    label: str = "",
) -> LoopSetup:
    theta = thetas[int(rng.integers(len(thetas)))]
    x = random_config(rng, int(rng.integers(1, n_max + 1)), theta, max_extra=2)
    kind = maps[int(rng.integers(len(maps)))]
    b_map = ConformalMap(kind=kind, q=float(rng.uniform(*Q_RANGE)) if kind == "q" else None)
    return LoopSetup(x=x, b_map=b_map, phi_plus=random_weight(rng), phi_minus=random_weight(rng), label=label)
