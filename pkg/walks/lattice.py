"""Young diagrams, θ-lattice configurations, walks and their height functions."""
import logging
import math
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from config import settings
from models.lattice import (
    BoundaryProfile,
    GridSpec,
    HeightField,
    ParticleConfig,
    WalkEnsemble,
    YoungDiagram,
)
from utils.exact import Scalar, as_scalar, is_integral, nearest_int
from walks.errors import InfeasibleEndpointsError, LatticeError, WalkError

logger = logging.getLogger("ThetaWalks")


def diagram_to_config(d: YoungDiagram, n: int, theta) -> ParticleConfig:
    """x_i = λ_i − (i−1)θ, missing rows read as zero"""
    theta = as_scalar(theta)
    if d.length > n:
        logger.error(f"LogicError - diagram has too many rows - rows={d.length} N={n}")
        raise LatticeError(f"diagram has {d.length} rows but N={n}")
    return ParticleConfig(positions=tuple(d.row(i) - i * theta for i in range(n)), theta=theta)


def config_to_diagram(x: ParticleConfig, offset: Scalar = 0) -> YoungDiagram:
    """Inverse of diagram_to_config for a configuration shifted by ``offset``"""
    rows = []
    for i, p in enumerate(x.positions):
        value = p + i * x.theta - offset
        if not is_integral(value) or value < -1e-9:
            raise LatticeError(f"x_{i + 1}={p} does not encode a row (value {value})")
        rows.append(nearest_int(value))
    return YoungDiagram(rows=tuple(rows))


def transpose(d: YoungDiagram) -> YoungDiagram:
    return d.transpose()


def is_in_lattice(positions: Sequence[Scalar], theta: Scalar) -> bool:
    for a, b in zip(positions[:-1], positions[1:]):
        excess = a - b - theta
        if excess < -1e-9 or not is_integral(excess):
            return False
    return True


def packed_pairs(positions: Sequence[Scalar], theta: Scalar) -> List[bool]:
    """packed[i] is true when x_i − x_{i+1} equals θ"""
    out = []
    for a, b in zip(positions[:-1], positions[1:]):
        excess = a - b - theta
        out.append(excess == 0 if isinstance(excess, Fraction) else abs(excess) <= settings.LATTICE_TOL)
    return out


def step_feasible(x: ParticleConfig, e: Sequence[int]) -> bool:
    """No packed pair may see its left particle jump alone"""
    if len(e) != x.n:
        raise LatticeError(f"step has length {len(e)} but N={x.n}")
    packed = packed_pairs(x.positions, x.theta)
    return not any(packed[i] and e[i] == 0 and e[i + 1] == 1 for i in range(x.n - 1))


def feasible_steps(
    positions: Sequence[Scalar],
    theta: Scalar,
    allowed: Optional[Sequence[Tuple[int, ...]]] = None,
) -> Iterator[Tuple[int, ...]]:
    """All feasible step vectors, optionally restricted per particle"""
    n = len(positions)
    packed = packed_pairs(positions, theta)
    choices = allowed if allowed is not None else [(0, 1)] * n
    prefix: List[int] = []

    def extend(i: int):
        if i == n:
            yield tuple(prefix)
            return
        for v in choices[i]:
            # index i−1 is the right neighbour of i
            if i > 0 and packed[i - 1] and prefix[i - 1] == 0 and v == 1:
                continue
            prefix.append(v)
            yield from extend(i + 1)
            prefix.pop()

    yield from extend(0)


def apply_step(x: ParticleConfig, e: Sequence[int]) -> ParticleConfig:
    if not step_feasible(x, e):
        raise LatticeError(f"step {tuple(e)} is infeasible from {x.positions}")
    return ParticleConfig(positions=tuple(p + v for p, v in zip(x.positions, e)), theta=x.theta)


def _check_pair(y: ParticleConfig, z: ParticleConfig) -> None:
    if y.n != z.n:
        raise LatticeError(f"endpoints have N={y.n} and N={z.n}")
    if y.theta != z.theta:
        raise LatticeError(f"endpoints have theta={y.theta} and theta={z.theta}")


def path_feasible(y: ParticleConfig, z: ParticleConfig, T: int) -> bool:
    """y_i ≤ z_i ≤ y_i + T for every particle (with integral displacement)"""
    _check_pair(y, z)
    for a, b in zip(y.positions, z.positions):
        d = b - a
        if not is_integral(d) or d < -1e-9 or d > T + 1e-9:
            return False
    return True


def displacements(y: ParticleConfig, z: ParticleConfig) -> Tuple[int, ...]:
    return tuple(nearest_int(b - a) for a, b in zip(y.positions, z.positions))


def canonical_path(y: ParticleConfig, z: ParticleConfig, T: int) -> WalkEnsemble:
    """Latest-moving witness x_i(t) = max(y_i, z_i − (T − t))"""
    if not path_feasible(y, z, T):
        logger.error(f"LogicError - infeasible endpoints - y={y.positions} z={z.positions} T={T}")
        raise InfeasibleEndpointsError(f"no walk from {y.positions} to {z.positions} in T={T}")
    steps = []
    for t in range(T + 1):
        steps.append(ParticleConfig(
            positions=tuple(max(a, b - (T - t)) for a, b in zip(y.positions, z.positions)),
            theta=y.theta,
        ))
    return WalkEnsemble(steps=tuple(steps), theta=y.theta)


def default_grid(
    configs: Sequence[ParticleConfig],
    T: int,
    n_scale: int,
    dx: Optional[float] = None,
) -> GridSpec:
    """Extent [min position − θ, max position + T + θ], dt = 1/N, dx = θ/(4N)"""
    theta = float(configs[0].theta)
    lo = min(float(p) for c in configs for p in c.positions) - theta
    hi = max(float(p) for c in configs for p in c.positions) + T + theta
    dx = dx if dx is not None else theta / (4 * n_scale)
    nx = int(math.ceil((hi - lo) / n_scale / dx)) + 1
    return GridSpec(x_min=lo / n_scale, dx=dx, nx=max(nx, 2), dt=1.0 / n_scale, nt=T + 1)


def _profile_heights(xs: np.ndarray, positions: np.ndarray, width: float) -> np.ndarray:
    """Σ_i clamp(x − p_i, 0, width) on nodes xs"""
    return np.clip(xs[:, None] - positions[None, :], 0.0, width).sum(axis=1)


def height_grid(positions: np.ndarray, theta: float, n_scale: int, grid: GridSpec) -> np.ndarray:
    """Height array for a (T+1, N) position array, linear in time between integer steps"""
    horizon = positions.shape[0] - 1
    width = theta / n_scale
    xs = grid.xs
    pos = positions / n_scale
    integer_columns = np.stack([_profile_heights(xs, pos[k], width) for k in range(horizon + 1)], axis=1)
    H = np.empty((grid.nx, grid.nt))
    for j, t in enumerate(grid.ts):
        raw = t * n_scale
        k = int(math.floor(raw + 1e-12))
        if k >= horizon:
            H[:, j] = integer_columns[:, horizon]
            continue
        frac = raw - k
        H[:, j] = (1 - frac) * integer_columns[:, k] + frac * integer_columns[:, k + 1]
    return H


def height_field(w: WalkEnsemble, n_scale: int, grid: Optional[GridSpec] = None) -> HeightField:
    """Rescaled height function of a walk on grid nodes"""
    theta = float(w.theta)
    grid = grid or default_grid([w.steps[0], w.steps[-1]], w.horizon, n_scale)
    coarse = grid.dx > theta / n_scale
    if coarse:
        logger.warning(f"Height: grid too coarse - dx={grid.dx} theta/N={theta / n_scale}")
    H = height_grid(w.positions_array(), theta, n_scale, grid)
    return HeightField(
        grid=H, x_min=grid.x_min, dx=grid.dx, dt=grid.dt, theta=theta,
        t_horizon=w.horizon / n_scale, n_scale=n_scale, coarse=coarse,
    )


def config_height(x: ParticleConfig, n_scale: int, xs: np.ndarray) -> np.ndarray:
    return _profile_heights(xs, x.as_array() / n_scale, float(x.theta) / n_scale)


def empirical_profile(x: ParticleConfig, n_scale: int) -> BoundaryProfile:
    """Exact piecewise-linear height profile of one configuration"""
    theta = float(x.theta)
    width = theta / n_scale
    starts = np.sort(x.as_array() / n_scale)
    knots = np.unique(np.round(np.concatenate([starts, starts + width, [starts[0] - width, starts[-1] + 2 * width]]), 12))
    return BoundaryProfile(xs=knots, h=_profile_heights(knots, starts, width), theta=theta)


def height_distance(a: HeightField, b: HeightField) -> float:
    if a.grid.shape != b.grid.shape or not math.isclose(a.x_min, b.x_min, abs_tol=1e-12):
        raise WalkError("height fields live on different grids")
    return float(np.max(np.abs(a.grid - b.grid)))


def _level_line(column: np.ndarray, xs: np.ndarray, u: float, top: float) -> float:
    """inf{x : H(x) > u} on a monotone column; −∞ below 0, +∞ at the top level"""
    if u < 0:
        return -math.inf
    if u >= top:
        return math.inf
    idx = int(np.searchsorted(column, u, side="right"))
    if idx >= column.size:
        return math.inf
    if idx == 0:
        return float(xs[0])
    lo, hi = column[idx - 1], column[idx]
    return float(xs[idx - 1] + (u - lo) / (hi - lo) * (xs[idx] - xs[idx - 1]))


def height_to_walk(
    H_star: HeightField,
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    eps: float,
) -> WalkEnsemble:
    """Walk from y to z whose height stays near H_star.

    The canonical path is clipped, particle by particle, between the level
    lines γ(θ(r−m)/N, t) and γ(θ(r+m)/N, t) of H_star, where r counts
    particles from the left and m = ⌈eps·N/(2θ)⌉, then moved to the nearest
    point of its own lattice coset.
    """
    if not path_feasible(y, z, T):
        raise InfeasibleEndpointsError(f"no walk from {y.positions} to {z.positions} in T={T}")
    n = H_star.n_scale
    theta = float(y.theta)
    if eps < 2 * theta / n - 1e-15:
        raise WalkError(f"eps={eps} is below 2θ/N={2 * theta / n}; the level-line window would be empty")
    m = int(math.ceil(eps * n / (2 * theta) - 1e-12))
    witness = canonical_path(y, z, T)
    xs = H_star.xs
    count = y.n
    steps = []
    for t in range(T + 1):
        column = H_star.column(t / n)
        positions = []
        for i, yv in enumerate(witness.steps[t].positions):
            r = count - i
            lower = _level_line(column, xs, theta * (r - m) / n, theta) * n
            upper = _level_line(column, xs, theta * (r + m) / n, theta) * n
            if yv > upper:
                xv = yv - math.ceil(float(yv - upper) - 1e-12)
            elif yv < lower:
                xv = yv + math.ceil(float(lower - yv) - 1e-12)
            else:
                xv = yv
            if xv < lower - 1e-9 or xv > upper + 1e-9:
                raise WalkError(f"no lattice point between level lines for particle {i + 1} at t={t}; increase eps")
            positions.append(xv)
        steps.append(positions)
    try:
        walk = WalkEnsemble(
            steps=tuple(ParticleConfig(positions=tuple(p), theta=y.theta) for p in steps),
            theta=y.theta,
        )
    except ValidationError as exc:
        raise WalkError(f"level-line construction did not produce a walk: {exc.errors()[0]['msg']}") from exc
    if walk.steps[0].positions != y.positions or walk.steps[-1].positions != z.positions:
        raise WalkError("level-line construction moved an endpoint; H_star boundary is farther than eps from y or z")
    grid = GridSpec(x_min=H_star.x_min, dx=H_star.dx, nx=H_star.grid.shape[0], dt=H_star.dt, nt=H_star.grid.shape[1])
    dist = height_distance(height_field(walk, n, grid), H_star)
    bound = settings.LEVEL_LINE_FACTOR * eps
    if dist > bound:
        logger.error(f"LogicError - level-line walk too far from H_star - sup_distance={dist} bound={bound}")
        raise WalkError(f"constructed walk is {dist:.3e} from H_star in sup norm, above C·eps={bound:.3e}")
    logger.info(f"HeightToWalk: constructed walk - N={count} T={T} m={m} eps={eps} sup_distance={dist:.3e}")
    return walk
