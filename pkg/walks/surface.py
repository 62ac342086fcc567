"""Lobachevsky function, surface tension and the free-entropy integrals.

L(x) = −∫_0^x ln|2 sin z| dz is evaluated as half the Clausen function
Cl₂(2x) through its Bernoulli-number power series on [−π, π], which reaches
double precision with a few dozen terms. The truncated Fourier series and
adaptive quadrature are kept as independent oracles.
"""
import logging
import math
from typing import Dict, Tuple, Union

import numpy as np
from scipy import integrate, special

from config import settings
from models.lattice import BoundaryProfile, ParticleConfig
from models.surface import ComplexSlope, Slope, SmoothedDrift
from walks.errors import SlopeDomainError, WalkError

logger = logging.getLogger("ThetaWalks")

ArrayLike = Union[float, np.ndarray]

_SERIES_TERMS = 40
_B = special.bernoulli(2 * _SERIES_TERMS)
_CLAUSEN_COEFFS = np.array([
    abs(_B[2 * k]) / (2 * k * math.factorial(2 * k + 1)) for k in range(1, _SERIES_TERMS + 1)
])
_CLAUSEN_POWERS = 2 * np.arange(1, _SERIES_TERMS + 1) + 1


def _clausen2(theta: np.ndarray) -> np.ndarray:
    """Cl₂ on [−π, π]"""
    a = np.abs(theta)
    safe = np.where(a > 0, a, 1.0)
    head = theta - theta * np.log(safe)
    tail = (theta[..., None] ** _CLAUSEN_POWERS * _CLAUSEN_COEFFS).sum(axis=-1)
    return np.where(a > 0, head + tail, 0.0)


def lobachevsky(x: ArrayLike) -> ArrayLike:
    """L(x) for any real x (π-periodic, odd)"""
    arr = np.asarray(x, dtype=float)
    reduced = np.mod(2 * arr + np.pi, 2 * np.pi) - np.pi
    out = 0.5 * _clausen2(reduced)
    return float(out) if out.ndim == 0 else out


def lobachevsky_fourier(x: float, terms: int = 1_000_000) -> float:
    """(1/2) Σ_{n≤K} sin(2nx)/n²; the tail is at most 1/(2K)"""
    total = 0.0
    chunk = 1 << 18
    for start in range(1, terms + 1, chunk):
        n = np.arange(start, min(start + chunk, terms + 1), dtype=float)
        total += math.fsum(np.sin(2 * n * x) / n ** 2)
    return 0.5 * total


def lobachevsky_quad(x: float) -> float:
    """−∫_0^x ln|2 sin z| dz by adaptive quadrature, split at multiples of π"""
    lo, hi, sign = (0.0, x, 1.0) if x >= 0 else (x, 0.0, -1.0)
    cuts = [k * math.pi for k in range(math.ceil(lo / math.pi), math.floor(hi / math.pi) + 1) if lo < k * math.pi < hi]
    edges = [lo, *cuts, hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(lambda z: math.log(abs(2 * math.sin(z))), a, b, limit=200, epsabs=1e-14, epsrel=1e-13)
        total += value
    return -sign * total


def sigma_array(s: ArrayLike, t: ArrayLike) -> ArrayLike:
    """σ(s, t) elementwise; inputs are assumed to lie in the slope triangle"""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = (lobachevsky(np.pi * (1 - s)) + lobachevsky(-np.pi * t) + lobachevsky(np.pi * (s + t))) / np.pi
    return float(out) if np.ndim(out) == 0 else out


def sigma(sl: Slope) -> float:
    """Surface tension (1/π)(L(π(1−s)) + L(−πt) + L(π(s+t)))"""
    return sigma_array(sl.s, sl.t)


def sigma_grad_array(s: ArrayLike, t: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """(∂_s σ, ∂_t σ) = (ln(sin πs / sin π(s+t)), ln(sin(−πt) / sin π(s+t)))"""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    ln_sum = np.log(np.sin(np.pi * (s + t)))
    return np.log(np.sin(np.pi * s)) - ln_sum, np.log(np.sin(-np.pi * t)) - ln_sum


def sigma_grad(sl: Slope, eta: float = None) -> Tuple[float, float]:
    eta = settings.SIGMA_ETA if eta is None else eta
    if not sl.is_interior(eta):
        logger.error(f"ValidationError - slope too close to boundary - s={sl.s} t={sl.t} eta={eta}")
        raise SlopeDomainError(f"slope ({sl.s}, {sl.t}) is within {eta} of the triangle boundary")
    ds, dt = sigma_grad_array(sl.s, sl.t)
    return float(ds), float(dt)


def complex_slope(sl: Slope) -> ComplexSlope:
    """f = e^{−iπs} sin(−πt)/sin(π(s+t)), the apex of the triangle {0, −1, f}"""
    if not sl.is_interior():
        raise SlopeDomainError(f"complex slope needs an interior slope, got ({sl.s}, {sl.t})")
    f = np.exp(-1j * np.pi * sl.s) * math.sin(-math.pi * sl.t) / math.sin(math.pi * (sl.s + sl.t))
    return ComplexSlope(f_real=float(f.real), f_imag=min(float(f.imag), 0.0))


def _merged_cells(h: BoundaryProfile) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cells of constant density with zero-density cells dropped"""
    rho = h.density()
    starts, ends, dens = [], [], []
    for a, b, r in zip(h.xs[:-1], h.xs[1:], rho):
        if r <= 0:
            continue
        if dens and abs(dens[-1] - r) <= 1e-12 and abs(ends[-1] - a) <= 1e-15:
            ends[-1] = b
        else:
            starts.append(a)
            ends.append(b)
            dens.append(r)
    return np.array(starts), np.array(ends), np.array(dens)


def _check_mass(h: BoundaryProfile, theta: float = None) -> float:
    theta = h.theta if theta is None else theta
    if abs(h.mass - theta) > 1e-9 * max(1.0, theta):
        logger.error(f"ValidationError - profile mass mismatch - mass={h.mass} theta={theta}")
        raise WalkError(f"profile mass {h.mass} differs from theta={theta}")
    return theta


def _corner_sum(F, a1, a2, b1, b2) -> np.ndarray:
    """∫_{a1}^{a2}∫_{b1}^{b2} F''(x − y) dy dx for every pair of cells"""
    A1, A2 = a1[:, None], a2[:, None]
    B1, B2 = b1[None, :], b2[None, :]
    return F(A2 - B1) - F(A1 - B1) - F(A2 - B2) + F(A1 - B2)


def _log_antiderivative(u: np.ndarray) -> np.ndarray:
    """G with G'' = ln|u|: u² ln|u|/2 − 3u²/4"""
    a = np.abs(u)
    return np.where(a > 0, u * u * np.log(np.where(a > 0, a, 1.0)) / 2, 0.0) - 0.75 * u * u


def free_entropy(h: BoundaryProfile, theta: float = None) -> float:
    """∬ ln|x − y| dh(x) dh(y) with the log kernel integrated exactly on cells"""
    _check_mass(h, theta)
    a, b, rho = _merged_cells(h)
    cells = _corner_sum(_log_antiderivative, a, b, a, b)
    return float(rho @ cells @ rho)


def _abs_antiderivative(u: np.ndarray) -> np.ndarray:
    return np.abs(u) ** 3 / 6


def _log_sinhc(y: np.ndarray) -> np.ndarray:
    """ln(sinh(y)/y) for y ≥ 0"""
    small = y <= 0.5
    ys = np.where(small, y, 0.5)
    yl = np.where(small, 1.0, y)
    near = np.log(np.where(ys > 0, np.sinh(ys) / np.where(ys > 0, ys, 1.0), 1.0))
    far = yl + np.log1p(-np.exp(-2 * yl)) - math.log(2) - np.log(yl)
    return np.where(small, near, far)


def free_entropy_q(h: BoundaryProfile, kappa: float, theta: float = None, nodes: int = 12) -> float:
    """∬ ln(1 − e^{κ|x−y|}) dh dh, κ < 0.

    ln(1 − e^{κ|u|}) = ln(−κ) + ln|u| + (κ/2)|u| + ln(sinh(c|u|)/(c|u|)), c = −κ/2;
    the first three pieces integrate in closed form and the last, even and
    smooth, by Gauss-Legendre on every pair of cells.
    """
    if kappa >= 0:
        raise WalkError(f"kappa must be negative, got {kappa}")
    mass = _check_mass(h, theta)
    a, b, rho = _merged_cells(h)
    log_part = float(rho @ _corner_sum(_log_antiderivative, a, b, a, b) @ rho)
    abs_part = float(rho @ _corner_sum(_abs_antiderivative, a, b, a, b) @ rho)
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    half = (b - a) / 2
    xs = ((a + b) / 2)[:, None] + half[:, None] * gx[None, :]
    ws = (half * rho)[:, None] * gw[None, :]
    xs, ws = xs.ravel(), ws.ravel()
    c = -kappa / 2
    smooth = float(ws @ _log_sinhc(c * np.abs(xs[:, None] - xs[None, :])) @ ws)
    return mass * mass * math.log(-kappa) + log_part + kappa / 2 * abs_part + smooth


def discrete_free_entropy(x: ParticleConfig, n_scale: int = None) -> float:
    """(2θ²/N²) Σ_{i<j} ln((x_i − x_j)/N)"""
    n_scale = n_scale or x.n
    theta = float(x.theta)
    p = x.as_array() / n_scale
    total = math.fsum(math.fsum(np.log(p[i] - p[i + 1:])) for i in range(x.n - 1))
    return 2 * theta * theta / n_scale ** 2 * total


def discrete_free_entropy_q(x: ParticleConfig, kappa: float, n_scale: int = None) -> float:
    """(2θ²/N²) Σ_{i<j} ln(1 − e^{κ(x_i − x_j)/N})"""
    if kappa >= 0:
        raise WalkError(f"kappa must be negative, got {kappa}")
    n_scale = n_scale or x.n
    theta = float(x.theta)
    p = x.as_array() / n_scale
    total = math.fsum(math.fsum(np.log(-np.expm1(kappa * (p[i] - p[i + 1:])))) for i in range(x.n - 1))
    return 2 * theta * theta / n_scale ** 2 * total


def _check_ramp(rho: float, v: float, ell: float, delta: float) -> None:
    if not 0 < rho <= 1:
        raise SlopeDomainError(f"density rho must lie in (0, 1], got {rho}")
    if not 0 < v < 1:
        raise SlopeDomainError(f"velocity v must lie in (0, 1), got {v}")
    if delta <= 0 or delta >= ell:
        raise WalkError(f"smoothing needs 0 < delta < ell, got delta={delta} ell={ell}")


def smoothed_drift_grid(
    x: np.ndarray, t: float, rho: float, v: float, ell: float, delta: float,
) -> Dict[str, np.ndarray]:
    """κ_t, Hib(κ_t), g_t, f_t and m_t on an array of positions"""
    _check_ramp(rho, v, ell, delta)
    x = np.asarray(x, dtype=float)
    shift = t * v
    kappa = (np.arctan((ell + shift - x) / delta) - np.arctan((shift - x) / delta)) / np.pi
    hib = 0.5 * np.log(((x - shift) ** 2 + delta ** 2) / ((x - ell - shift) ** 2 + delta ** 2))
    g = np.log(np.sin(np.pi * rho * v * kappa)) - np.log(np.sin(np.pi * rho * (1 - v) * kappa)) - rho * hib
    s = rho * kappa
    f = np.exp(-1j * np.pi * s) * np.sin(np.pi * rho * v * kappa) / np.sin(np.pi * rho * (1 - v) * kappa)
    m = rho * (hib - 1j * np.pi * kappa)
    return {"kappa": kappa, "hilbert": hib, "g": g, "f": f, "m": m}


def smoothed_drift(x: float, t: float, rho: float, v: float, ell: float, delta: float) -> SmoothedDrift:
    """Drift g_t(x) that makes the δ-smoothed ramp of density ρ translate at speed v"""
    out = smoothed_drift_grid(np.array([x]), t, rho, v, ell, delta)
    f, m = complex(out["f"][0]), complex(out["m"][0])
    return SmoothedDrift(
        kappa=float(out["kappa"][0]),
        hilbert=float(out["hilbert"][0]),
        g=float(out["g"][0]),
        f_real=f.real,
        f_imag=min(f.imag, 0.0),
        m_real=m.real,
        m_imag=m.imag,
    )
