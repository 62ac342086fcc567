"""Finite-N against large-N: the trend checks behind verify-ldp, verify-jack and verify-macdonald.

The limits are N → ∞ statements, so each harness reports the measured values
along a schedule of N, the asymptotic target from the variational solver and
whether the gap shrinks monotonically.
"""
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from models.harness import KappaComparison, PrincipalPoint, TrendReport
from models.lattice import BoundaryProfile, GridSpec, ParticleConfig, YoungDiagram
from models.symfun import QParams
from models.weights import DriftFunction, DriftProfile
from utils.exact import as_scalar
from walks.errors import StateExplosionError, WalkError
from walks.sampler import ball_log_probability
from walks.symfun import (
    jack_principal,
    jack_principal_limit,
    macdonald_principal,
    macdonald_principal_limit,
    skew_jack_pathsum,
    skew_macdonald_pathsum,
)
from walks.variational import rate_J, solve_limit_shape, solver_grid, translating_ramp

logger = logging.getLogger("ThetaWalks")


def segment_profile(left: float, right: float, theta: float) -> BoundaryProfile:
    """Constant density θ/(right − left) on [left, right]"""
    return BoundaryProfile(
        xs=np.array([left - 1.0, left, right, right + 1.0]),
        h=np.array([0.0, 0.0, theta, theta]),
        theta=theta,
    )


def strictly_decreasing(gaps: Sequence[float]) -> bool:
    return len(gaps) >= 2 and all(math.isfinite(g) for g in gaps) and all(b < a for a, b in zip(gaps, gaps[1:]))


def spread_config(n: int, theta) -> ParticleConfig:
    """x_1 = 0 and every gap θ + 1, density θ/(θ + 1)"""
    theta = as_scalar(theta)
    return ParticleConfig(positions=tuple(-i * (theta + 1) for i in range(n)), theta=theta)


def verify_ldp(
    theta="1",
    schedule: Sequence[int] = (4, 6, 8),
    eps: float = 0.25,
    horizon: float = 2.0,
    speed: float = 0.5,
    grid_steps: Optional[int] = None,
) -> TrendReport:
    """Ball probabilities around a translating ramp against −(1/θ)J(H*) − T ln 2"""
    theta_f = float(as_scalar(theta))
    rho, ell = theta_f / (theta_f + 1), theta_f + 1
    steps = grid_steps or settings.GRID_STEPS
    h = horizon / steps
    done: List[int] = []
    values: List[float] = []
    targets: List[float] = []
    notes: List[str] = []
    for n in schedule:
        T = int(round(horizon * n))
        shift = int(round(speed * T))
        if abs(T - horizon * n) > 1e-9 or abs(shift - speed * T) > 1e-9:
            notes.append(f"N={n}: horizon*N or speed*T is not an integer, skipped")
            continue
        y = spread_config(n, theta)
        z = ParticleConfig(positions=tuple(p + shift for p in y.positions), theta=y.theta)
        x0 = float(y.positions[-1]) / n
        lo = x0 - 0.5
        hi = x0 + ell + speed * horizon + 0.5
        grid = GridSpec(x_min=lo, dx=h, nx=int(math.ceil((hi - lo) / h)) + 1, dt=h, nt=steps + 1)
        F = translating_ramp(rho, speed, ell, horizon, theta_f, grid, x0=x0)
        target = -rate_J(F).J_value / theta_f - horizon * math.log(2)
        try:
            value = ball_log_probability(y, z, T, F.to_height_field(n_scale=n), eps, n_scale=n)
        except StateExplosionError as exc:
            notes.append(f"N={n}: schedule truncated ({exc})")
            logger.warning(f"Harness: state explosion - command=verify-ldp N={n}")
            break
        if value == -math.inf:
            notes.append(f"N={n}: no walk stays in the eps-ball")
        done.append(n)
        values.append(value)
        targets.append(target)
    target = float(np.mean(targets)) if targets else math.nan
    gaps = tuple(abs(v - t) for v, t in zip(values, targets))
    report = TrendReport(
        command="verify-ldp", theta=theta_f, schedule=tuple(done), values=tuple(values), target=target,
        gaps=gaps, decreasing=strictly_decreasing(gaps), notes=tuple(notes),
        tolerances={"eps": eps, "grid_dx": h},
    )
    logger.info(f"Harness: verify-ldp - theta={theta_f} schedule={done} gaps={[f'{g:.4g}' for g in gaps]}")
    return report


def half_staircase(n: int) -> YoungDiagram:
    """λ_i = ⌊(N − i + 1)/2⌋"""
    return YoungDiagram(rows=tuple((n - i) // 2 for i in range(n)))


def _skew_profiles(theta: float) -> Tuple[BoundaryProfile, BoundaryProfile]:
    """Limits of the empty diagram (packed) and of the half staircase"""
    return segment_profile(-theta, 0.0, theta), segment_profile(-theta, 0.5, theta)


def _skew_target(theta: float, f: Optional[DriftFunction], grid_steps: Optional[int]) -> Tuple[float, dict]:
    h0, hT = _skew_profiles(theta)
    grid = solver_grid(h0, hT, 0.5, grid_steps)
    _, report = solve_limit_shape(h0, hT, 0.5, theta, f, grid)
    return report.sup_value / theta, {"solver_tol": report.tolerances.get("solver_tol", 0.0), "grid_dx": grid.dx}


def _skew_trend(
    command: str,
    theta: float,
    schedule: Sequence[int],
    f: Optional[DriftFunction],
    grid_steps: Optional[int],
    skew: Callable[[YoungDiagram, YoungDiagram, DriftProfile, int], float],
    principal: Callable[[YoungDiagram, int], float],
    principal_limit: float,
    kappa: Optional[float] = None,
) -> TrendReport:
    target, tolerances = _skew_target(theta, f, grid_steps)
    done, values, points, notes = [], [], [], []
    mu = YoungDiagram()
    for n in schedule:
        lam = half_staircase(n)
        T = n // 2
        drift = DriftProfile.from_function(f, T, n) if f is not None else DriftProfile.ones(T)
        try:
            value = skew(lam, mu, drift, n) / n ** 2
        except StateExplosionError as exc:
            notes.append(f"N={n}: schedule truncated ({exc})")
            logger.warning(f"Harness: state explosion - command={command} N={n}")
            break
        done.append(n)
        values.append(value)
        points.append(PrincipalPoint(n=n, value=principal(lam, n) / n ** 2, limit=principal_limit))
    gaps = tuple(abs(v - target) for v in values)
    report = TrendReport(
        command=command, theta=theta, kappa=kappa, schedule=tuple(done), values=tuple(values),
        target=target, gaps=gaps, decreasing=strictly_decreasing(gaps), principal=tuple(points),
        notes=tuple(notes), tolerances=tolerances,
    )
    logger.info(f"Harness: {command} - theta={theta} kappa={kappa} schedule={done} gaps={[f'{g:.4g}' for g in gaps]}")
    return report


def verify_jack(
    theta="1",
    schedule: Sequence[int] = (4, 6, 8),
    f: Optional[DriftFunction] = None,
    grid_steps: Optional[int] = None,
) -> TrendReport:
    """(1/N²) ln J_{λ'/μ'}(e^{f(t/N)}; 1/θ) for μ = ∅ and half staircases λ, against (1/θ)·sup"""
    theta_s = as_scalar(theta)
    theta_f = float(theta_s)
    _, hT = _skew_profiles(theta_f)
    return _skew_trend(
        "verify-jack", theta_f, schedule, f, grid_steps,
        skew=lambda lam, mu, b, n: skew_jack_pathsum(lam, mu, b, n, theta_s).log_value,
        principal=lambda lam, n: jack_principal(lam, n, theta_s).log_value,
        principal_limit=jack_principal_limit(hT, theta_f),
    )


def verify_macdonald(
    theta="1",
    kappa: float = -1.0,
    schedule: Sequence[int] = (4, 6, 8),
    f: Optional[DriftFunction] = None,
    grid_steps: Optional[int] = None,
) -> TrendReport:
    """The Macdonald counterpart with q = e^{κ/N}; the target does not involve κ"""
    if kappa >= 0:
        raise WalkError(f"kappa must be negative, got {kappa}")
    theta_f = float(as_scalar(theta))
    _, hT = _skew_profiles(theta_f)
    return _skew_trend(
        "verify-macdonald", theta_f, schedule, f, grid_steps,
        skew=lambda lam, mu, b, n: skew_macdonald_pathsum(lam, mu, b, n, QParams.from_kappa(kappa, n, theta_f)).log_value,
        principal=lambda lam, n: macdonald_principal(lam, n, QParams.from_kappa(kappa, n, theta_f)).log_value,
        principal_limit=macdonald_principal_limit(hT, theta_f, kappa),
        kappa=kappa,
    )


def compare_kappas(
    theta="1",
    kappas: Tuple[float, float] = (-0.5, -2.0),
    schedule: Sequence[int] = (4, 6, 8),
    f: Optional[DriftFunction] = None,
    grid_steps: Optional[int] = None,
) -> KappaComparison:
    """Macdonald trends at two κ and whether they close in on each other"""
    first = verify_macdonald(theta, kappas[0], schedule, f, grid_steps)
    second = verify_macdonald(theta, kappas[1], schedule, f, grid_steps)
    shared = tuple(n for n in first.schedule if n in second.schedule)
    by_n = [dict(zip(r.schedule, r.values)) for r in (first, second)]
    gaps = tuple(abs(by_n[0][n] - by_n[1][n]) for n in shared)
    return KappaComparison(first=first, second=second, schedule=shared, gaps=gaps, converging=strictly_decreasing(gaps))
