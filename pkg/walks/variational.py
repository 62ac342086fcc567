"""Admissible grid fields and the limit-shape variational problem.

Each grid cell is split along its main diagonal into two triangles; on each
triangle the height is linear, with slope (s, t) read off one horizontal and
one vertical edge. Admissibility of every triangle slope is then a set of edge
difference constraints:

    0 ≤ H[i+1, j] − H[i, j] ≤ h,    −h ≤ H[i, j+1] − H[i, j] ≤ 0,
    0 ≤ H[i+1, j+1] − H[i, j] ≤ h.

Boundary rows (t = 0, T) and the outer columns (H = 0 on the left, θ on the
right) are fixed.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator

from config import settings
from models.lattice import BoundaryProfile, GridSpec, HeightField
from models.variational import AdmissibleGridField, RateReport
from models.weights import DriftFunction
from walks.errors import SolverError, WalkError
from walks.surface import free_entropy, sigma_array, sigma_grad_array

logger = logging.getLogger("ThetaWalks")

_CENTER = np.array([2 / 3, -1 / 3])

# (axis offsets of the second node, lower bound, upper bound in units of h)
_EDGES = (
    ((1, 0), 0.0, 1.0),
    ((0, 1), -1.0, 0.0),
    ((1, 1), 0.0, 1.0),
)


def solver_grid(h0: BoundaryProfile, hT: BoundaryProfile, T: float, steps: Optional[int] = None) -> GridSpec:
    """dt = T/steps, dx = dt, extent covering both profiles with two spare columns each side"""
    steps = steps or settings.GRID_STEPS
    if T <= 0:
        raise WalkError(f"horizon must be positive, got {T}")
    h = T / steps
    lo = min(h0.xs[0], hT.xs[0]) - 2 * h
    hi = max(h0.xs[-1], hT.xs[-1]) + 2 * h
    nx = int(math.ceil((hi - lo) / h)) + 1
    return GridSpec(x_min=lo, dx=h, nx=nx, dt=h, nt=steps + 1)


def _fixed_mask(nx: int, nt: int) -> np.ndarray:
    mask = np.zeros((nx, nt), dtype=bool)
    mask[:, 0] = mask[:, -1] = True
    mask[0, :] = mask[-1, :] = True
    return mask


def _boundary_frame(h0: BoundaryProfile, hT: BoundaryProfile, grid: GridSpec, theta: float) -> np.ndarray:
    xs = grid.xs
    frame = np.full((grid.nx, grid.nt), np.nan)
    frame[:, 0] = h0.at(xs)
    frame[:, -1] = hT.at(xs)
    for row, name in ((frame[:, 0], "initial"), (frame[:, -1], "final")):
        if abs(row[0]) > 1e-12 or abs(row[-1] - theta) > 1e-9:
            raise SolverError(f"the grid does not cover the support of the {name} profile")
    frame[0, 1:-1] = 0.0
    frame[-1, 1:-1] = theta
    return frame


def _pairs(H: np.ndarray, offset: Tuple[int, int], parity: int):
    """Views (a, b) over disjoint node pairs of one edge family"""
    di, dj = offset
    nx, nt = H.shape
    if di == 1 and dj == 0:
        return (slice(parity, nx - 1, 2), slice(None)), (slice(parity + 1, nx, 2), slice(None))
    if di == 0:
        return (slice(None), slice(parity, nt - 1, 2)), (slice(None), slice(parity + 1, nt, 2))
    return (slice(parity, nx - 1, 2), slice(0, nt - 1)), (slice(parity + 1, nx, 2), slice(1, nt))


def _project_family(H: np.ndarray, fixed: np.ndarray, h: float, offset, lo: float, hi: float, parity: int) -> None:
    ia, ib = _pairs(H, offset, parity)
    a, b = H[ia], H[ib]
    fa, fb = fixed[ia], fixed[ib]
    d = b - a
    corr = np.clip(d, lo * h, hi * h) - d
    both = ~fa & ~fb
    a -= np.where(both, corr / 2, np.where(fb & ~fa, corr, 0.0))
    b += np.where(both, corr / 2, np.where(fa & ~fb, corr, 0.0))
    H[ia], H[ib] = a, b


def max_violation(H: np.ndarray, h: float) -> float:
    worst = 0.0
    for (di, dj), lo, hi in _EDGES:
        d = H[di:, dj:] - H[: H.shape[0] - di, : H.shape[1] - dj]
        worst = max(worst, float(np.max(lo * h - d, initial=0.0)), float(np.max(d - hi * h, initial=0.0)))
    return worst


def project(H: np.ndarray, fixed: np.ndarray, h: float, tol: float = None, max_sweeps: int = None) -> np.ndarray:
    """Euclidean projection onto the admissible polytope by Dykstra's cyclic scheme"""
    tol = settings.PROJECTION_TOL if tol is None else tol
    max_sweeps = max_sweeps or settings.PROJECTION_MAX_SWEEPS
    x = H.copy()
    families = [(offset, lo, hi, parity) for offset, lo, hi in _EDGES for parity in (0, 1)]
    increments = [np.zeros_like(x) for _ in families]
    for sweep in range(max_sweeps):
        moved = 0.0
        for k, (offset, lo, hi, parity) in enumerate(families):
            y = x + increments[k]
            projected = y.copy()
            _project_family(projected, fixed, h, offset, lo, hi, parity)
            increments[k] = y - projected
            moved = max(moved, float(np.max(np.abs(projected - x))))
            x = projected
        if moved <= tol:
            break
    violation = max_violation(x, h)
    if violation > 1e-9:
        logger.warning(f"Solver: projection left violations - max={violation:.3e} sweeps={sweep + 1}")
    return x


def _relax(bound: np.ndarray, fixed: np.ndarray, h: float, upper: bool) -> np.ndarray:
    """Tightest pointwise bound implied by the difference constraints from the fixed nodes"""
    out = bound.copy()
    for _ in range(out.size):
        before = out.copy()
        for (di, dj), lo, hi in _EDGES:
            ia = (slice(0, out.shape[0] - di), slice(0, out.shape[1] - dj))
            ib = (slice(di, None), slice(dj, None))
            if upper:
                # H[a] ≤ H[b] − lo·h and H[b] ≤ H[a] + hi·h
                out[ia] = np.where(fixed[ia], out[ia], np.minimum(out[ia], out[ib] - lo * h))
                out[ib] = np.where(fixed[ib], out[ib], np.minimum(out[ib], out[ia] + hi * h))
            else:
                out[ib] = np.where(fixed[ib], out[ib], np.maximum(out[ib], out[ia] + lo * h))
                out[ia] = np.where(fixed[ia], out[ia], np.maximum(out[ia], out[ib] - hi * h))
        if np.array_equal(out, before):
            break
    return out


def admissible_extensions(
    h0: BoundaryProfile,
    hT: BoundaryProfile,
    grid: GridSpec,
    theta: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """(upper, lower) pointwise extreme admissible fields; raises when they do not bracket"""
    theta = h0.theta if theta is None else theta
    if abs(grid.dx - grid.dt) > 1e-12 * grid.dx:
        raise SolverError(f"solver grids need dx == dt, got dx={grid.dx} dt={grid.dt}")
    frame = _boundary_frame(h0, hT, grid, theta)
    fixed = _fixed_mask(grid.nx, grid.nt)
    upper = _relax(np.where(fixed, frame, theta), fixed, grid.dx, upper=True)
    lower = _relax(np.where(fixed, frame, 0.0), fixed, grid.dx, upper=False)
    if np.any(lower > upper + 1e-12) or max_violation(upper, grid.dx) > 1e-9 or max_violation(lower, grid.dx) > 1e-9:
        logger.error("LogicError - no admissible extension between the boundary profiles")
        raise SolverError("boundary profiles admit no admissible extension on this grid")
    return upper, lower


def _slopes(H: np.ndarray, h: float):
    sA = (H[1:, :-1] - H[:-1, :-1]) / h
    tA = (H[1:, 1:] - H[1:, :-1]) / h
    sB = (H[1:, 1:] - H[:-1, 1:]) / h
    tB = (H[:-1, 1:] - H[:-1, :-1]) / h
    return (sA, tA), (sB, tB)


def _closed(s: np.ndarray, t: np.ndarray):
    s = np.clip(s, 0.0, 1.0)
    t = np.clip(t, -1.0, 0.0)
    return s, np.maximum(t, -s)


def _shrunk(s: np.ndarray, t: np.ndarray, eta: float):
    """Contract the triangle toward its center so every margin is at least eta"""
    s, t = _closed(s, t)
    lam = min(3 * eta, 1.0)
    return _CENTER[0] + (1 - lam) * (s - _CENTER[0]), _CENTER[1] + (1 - lam) * (t - _CENTER[1])


def _entropy(H: np.ndarray, h: float) -> float:
    total = 0.0
    for s, t in _slopes(H, h):
        total += float(np.sum(sigma_array(*_closed(s, t))))
    return total * h * h / 2


def _entropy_gradient(H: np.ndarray, h: float, eta: float) -> np.ndarray:
    (sA, tA), (sB, tB) = _slopes(H, h)
    gsA, gtA = sigma_grad_array(*_shrunk(sA, tA, eta))
    gsB, gtB = sigma_grad_array(*_shrunk(sB, tB, eta))
    G = np.zeros_like(H)
    half = h / 2
    G[1:, :-1] += half * (gsA - gtA)
    G[:-1, :-1] -= half * gsA
    G[1:, 1:] += half * gtA
    G[1:, 1:] += half * gsB
    G[:-1, 1:] += half * (gtB - gsB)
    G[:-1, :-1] -= half * gtB
    return G


def _time_weights(nt: int, dt: float) -> np.ndarray:
    w = np.full(nt, dt)
    w[0] = w[-1] = dt / 2
    return w


def _drift_value(H: np.ndarray, h: float, ts: np.ndarray, f: Optional[DriftFunction]) -> float:
    if f is None or f.is_zero:
        return 0.0
    Q = trapezoid(H, dx=h, axis=0)
    boundary = -(f.value(ts[-1]) * Q[-1] - f.value(ts[0]) * Q[0])
    return float(boundary + np.sum(f.derivative(ts) * Q * _time_weights(ts.size, h)))


def _drift_gradient(H: np.ndarray, h: float, ts: np.ndarray, f: Optional[DriftFunction]) -> np.ndarray:
    if f is None or f.is_zero:
        return np.zeros_like(H)
    wx = np.full(H.shape[0], h)
    wx[0] = wx[-1] = h / 2
    return wx[:, None] * (f.derivative(ts) * _time_weights(ts.size, h))[None, :]


def entropy_functional(F: AdmissibleGridField) -> float:
    """Σ over triangles of σ(slope)·dx·dt/2"""
    violation = max_violation(np.asarray(F.H), F.dx)
    if violation > 1e-6 * F.dx:
        logger.error(f"ValidationError - inadmissible field - violation={violation:.3e}")
        raise WalkError(f"field is not admissible (edge violation {violation:.3e})")
    return _entropy(np.asarray(F.H), F.dx)


def drift_functional(F: AdmissibleGridField, f: Optional[DriftFunction]) -> float:
    """F^f(H) = −∬ f(s) ∂_s H dy ds, summed by parts: −[f Q]_0^T + ∫ f'(s) Q(s) ds"""
    return _drift_value(np.asarray(F.H), F.dx, F.ts, f)


def rate_J(
    F: AdmissibleGridField,
    f: Optional[DriftFunction] = None,
    J_min: Optional[float] = None,
) -> RateReport:
    """J = −entropy − F^f − ½(E_T − E_0); I = (J − J_min)/θ when J_min is known"""
    entropy = entropy_functional(F)
    drift = drift_functional(F, f)
    e0 = free_entropy(F.h0, F.theta)
    eT = free_entropy(F.hT, F.theta)
    J = -entropy - drift - 0.5 * (eT - e0)
    I = None if J_min is None else (J - J_min) / F.theta
    return RateReport(
        entropy_term=entropy, free_entropy_0=e0, free_entropy_T=eT, free_entropy_term=eT - e0,
        drift_term=drift, J_value=J, sup_value=entropy + drift, J_min=J_min, I_value=I,
    )


def _objective(H: np.ndarray, h: float, ts: np.ndarray, f: Optional[DriftFunction]) -> float:
    return _entropy(H, h) + _drift_value(H, h, ts, f)


def _ascend(H: np.ndarray, fixed: np.ndarray, h: float, ts: np.ndarray, f, tol, patience, max_iter):
    eta = settings.SIGMA_ETA
    value = _objective(H, h, ts, f)
    history = [(0, value)]
    alpha, calm, converged, it = 1.0, 0, False, 0
    for it in range(1, max_iter + 1):
        g = _entropy_gradient(H, h, eta) + _drift_gradient(H, h, ts, f)
        g[fixed] = 0.0
        step_taken = False
        for _ in range(40):
            candidate = project(H + alpha * g, fixed, h)
            cand_value = _objective(candidate, h, ts, f)
            if cand_value >= value:
                step_taken = True
                break
            alpha /= 2
        if not step_taken:
            converged = True
            break
        rel = (cand_value - value) / max(1.0, abs(value))
        H, value = candidate, cand_value
        alpha = min(alpha * 1.5, 10.0)
        calm = calm + 1 if rel < tol else 0
        if it % 10 == 0:
            history.append((it, value))
        if calm >= patience:
            converged = True
            break
    history.append((it, value))
    return H, value, converged, it, tuple(history[-200:])


def _field(H: np.ndarray, grid: GridSpec, theta: float, h0: BoundaryProfile, hT: BoundaryProfile) -> AdmissibleGridField:
    return AdmissibleGridField(H=H, x_min=grid.x_min, dx=grid.dx, dt=grid.dt, theta=theta, h0=h0, hT=hT)


def solve_limit_shape(
    h0: BoundaryProfile,
    hT: BoundaryProfile,
    T: float,
    theta: Optional[float] = None,
    f: Optional[DriftFunction] = None,
    grid: Optional[GridSpec] = None,
    start: str = "mid",
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> Tuple[AdmissibleGridField, RateReport]:
    """Maximize Σσ(∇H)dxdt + F^f(H) over admissible fields with the given boundary rows"""
    theta = h0.theta if theta is None else theta
    tol = settings.SOLVER_TOL if tol is None else tol
    max_iter = max_iter or settings.SOLVER_MAX_ITER
    grid = grid or solver_grid(h0, hT, T)
    if abs(grid.dt * (grid.nt - 1) - T) > 1e-9 * max(1.0, T):
        raise SolverError(f"grid spans t in [0, {grid.dt * (grid.nt - 1)}] but T={T}")
    upper, lower = admissible_extensions(h0, hT, grid, theta)
    starts = {"upper": upper, "lower": lower, "mid": (upper + lower) / 2}
    if start not in starts:
        raise WalkError(f"unknown start {start!r}; expected one of {sorted(starts)}")
    fixed = _fixed_mask(grid.nx, grid.nt)
    H, value, converged, iterations, history = _ascend(
        starts[start].copy(), fixed, grid.dx, grid.ts, f, tol, settings.SOLVER_PATIENCE, max_iter,
    )
    if not converged:
        logger.warning(f"Solver: iteration cap reached - iterations={iterations} value={value:.12g}")
    F = _field(H, grid, theta, h0, hT)
    base = rate_J(F, f)
    report = base.model_copy(update={
        "J_min": base.J_value,
        "I_value": 0.0,
        "converged": converged,
        "iterations": iterations,
        "history": history,
        "tolerances": {
            "solver_tol": tol,
            "projection_tol": settings.PROJECTION_TOL,
            "sigma_eta": settings.SIGMA_ETA,
            "dx": grid.dx,
        },
    })
    logger.info(
        f"Solver: limit shape - grid={grid.nx}x{grid.nt} start={start} iterations={iterations} "
        f"converged={converged} J={report.J_value:.10g}"
    )
    return F, report


def two_start_gap(
    h0: BoundaryProfile,
    hT: BoundaryProfile,
    T: float,
    theta: Optional[float] = None,
    f: Optional[DriftFunction] = None,
    grid: Optional[GridSpec] = None,
) -> Tuple[float, float]:
    """(objective gap, sup field gap) between runs started from the upper and lower extensions"""
    F_up, rep_up = solve_limit_shape(h0, hT, T, theta, f, grid, start="upper")
    F_lo, rep_lo = solve_limit_shape(h0, hT, T, theta, f, grid, start="lower")
    gap = abs(rep_up.sup_value - rep_lo.sup_value)
    field_gap = float(np.max(np.abs(F_up.H - F_lo.H)))
    if field_gap > 10 * F_up.dx:
        logger.warning(f"Solver: starts disagree on the field - field_gap={field_gap:.3e} objective_gap={gap:.3e}")
    return gap, field_gap


def rate(
    F: AdmissibleGridField,
    f: Optional[DriftFunction] = None,
) -> RateReport:
    """Rate of a given field, I = (J − J_min)/θ with J_min from the solver on the same grid"""
    grid = GridSpec(x_min=F.x_min, dx=F.dx, nx=F.H.shape[0], dt=F.dt, nt=F.H.shape[1])
    _, optimum = solve_limit_shape(F.h0, F.hT, F.horizon, F.theta, f, grid)
    return rate_J(F, f, J_min=optimum.J_value)


def euler_lagrange_residual(
    F: AdmissibleGridField,
    f: Optional[DriftFunction] = None,
    margin: float = 1e-3,
) -> Tuple[float, int]:
    """(max |∂G/∂H|/h², node count) over free nodes whose six triangles have slopes margin-inside"""
    H = np.asarray(F.H)
    h = F.dx
    g = _entropy_gradient(H, h, settings.SIGMA_ETA) + _drift_gradient(H, h, F.ts, f)
    (sA, tA), (sB, tB) = _slopes(H, h)
    inside = np.ones_like(sA, dtype=bool)
    for s, t in ((sA, tA), (sB, tB)):
        inside &= (1 - s > margin) & (-t > margin) & (s + t > margin)
    ok = np.zeros_like(H, dtype=bool)
    ok[1:-1, 1:-1] = (
        inside[1:, 1:] & inside[:-1, 1:] & inside[1:, :-1] & inside[:-1, :-1]
    )
    count = int(ok.sum())
    if count == 0:
        return 0.0, 0
    return float(np.max(np.abs(g[ok])) / (h * h)), count


def translating_ramp(
    rho: float,
    v: float,
    ell: float,
    T: float,
    theta: float,
    grid: GridSpec,
    x0: float = 0.0,
) -> AdmissibleGridField:
    """H(x, t) = ρ·clip(x − x0 − vt, 0, ℓ): density ρ on [x0 + vt, x0 + vt + ℓ]"""
    if abs(rho * ell - theta) > 1e-9 * max(1.0, theta):
        raise WalkError(f"ramp mass rho*ell={rho * ell} differs from theta={theta}")
    if not (0 < rho <= 1 and 0 <= v <= 1):
        raise WalkError(f"ramp needs rho in (0,1] and v in [0,1], got rho={rho} v={v}")
    xs, ts = grid.xs, grid.ts
    if abs(ts[-1] - T) > 1e-9 * max(1.0, T):
        raise WalkError(f"grid spans t in [0, {ts[-1]}] but T={T}")
    H = rho * np.clip(xs[:, None] - x0 - v * ts[None, :], 0.0, ell)

    def profile(shift: float) -> BoundaryProfile:
        left = x0 + shift
        return BoundaryProfile(
            xs=np.array([left - 1.0, left, left + ell, left + ell + 1.0]),
            h=np.array([0.0, 0.0, theta, theta]),
            theta=theta,
        )

    return _field(H, grid, theta, profile(0.0), profile(v * T))


def field_from_height(Hf: HeightField, grid: Optional[GridSpec] = None) -> AdmissibleGridField:
    """Resample a height field onto a solver grid and project it onto the admissible set"""
    if grid is None:
        h = Hf.dt
        nx = int(math.ceil((Hf.xs[-1] - Hf.x_min) / h)) + 1
        grid = GridSpec(x_min=Hf.x_min, dx=h, nx=nx, dt=h, nt=Hf.grid.shape[1])
    interp = RegularGridInterpolator((Hf.xs, Hf.ts), Hf.grid, bounds_error=False, fill_value=None)
    X, Tm = np.meshgrid(grid.xs, np.clip(grid.ts, 0, Hf.ts[-1]), indexing="ij")
    raw = np.clip(interp(np.stack([X, Tm], axis=-1)), 0.0, Hf.theta)
    raw[0, :] = 0.0
    raw[-1, :] = Hf.theta
    h0 = BoundaryProfile(xs=grid.xs, h=np.maximum.accumulate(raw[:, 0]), theta=Hf.theta)
    hT = BoundaryProfile(xs=grid.xs, h=np.maximum.accumulate(raw[:, -1]), theta=Hf.theta)
    raw[:, 0], raw[:, -1] = h0.h, hT.h
    H = project(raw, _fixed_mask(grid.nx, grid.nt), grid.dx)
    return _field(H, grid, Hf.theta, h0, hT)
