"""Dynamical loop equation: holomorphy of the one-step observable, checked by contour residues.

For the general kernel

    P(x + θe | x) ∝ Π_{i<j} (b(x_i+θe_i) − b(x_j+θe_j)) / (b(x_i) − b(x_j)) · Π_i φ+(x_i)^{e_i} φ−(x_i)^{1−e_i}

the expectation

    E[ φ+(z) Π_j (b(z+θ) − b(x_j+θe_j)) / (b(z) − b(x_j)) + φ−(z) Π_j (b(z) − b(x_j+θe_j)) / (b(z) − b(x_j)) ]

has no poles at the particles. The expectation is taken over all of {0,1}^N so
that the residue test is a deterministic floating-point statement.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from config import settings
from models.lattice import BoundaryProfile
from models.loop import AnalyticWeight, LoopCorpusReport, LoopReport, LoopSetup
from utils.data_generator import random_loop_setup
from walks.errors import EnumerationCapError, PoleError, WalkError

logger = logging.getLogger("ThetaWalks")

POLE_TOL = 1e-14


def step_law(setup: LoopSetup) -> List[Tuple[Tuple[int, ...], float]]:
    """Probability of every e ∈ {0,1}^N under the general kernel (zeros included)"""
    n = setup.n
    if n > settings.LOOP_ENUMERATION_CAP:
        raise EnumerationCapError(f"N={n} is above the loop enumeration cap {settings.LOOP_ENUMERATION_CAP}")
    x = setup.x.as_array()
    theta = setup.theta
    bx = setup.b_map(x)
    plus, minus = setup.phi_plus(x), setup.phi_minus(x)
    iu, ju = np.triu_indices(n, k=1)
    base = bx[iu] - bx[ju]
    steps = list(product((0, 1), repeat=n))
    weights = []
    for e in steps:
        e_arr = np.array(e)
        moved = setup.b_map(x + theta * e_arr)
        ratio = np.prod((moved[iu] - moved[ju]) / base) if n > 1 else 1.0
        weights.append(ratio * np.prod(np.where(e_arr == 1, plus, minus)))
    weights = np.array(weights)
    total = weights.sum()
    if abs(total) < POLE_TOL * max(1.0, float(np.abs(weights).max())):
        raise WalkError(f"general kernel normalization vanishes for x={tuple(x)}")
    probs = (weights / total).real
    return list(zip(steps, probs.tolist()))


def loop_observable(setup: LoopSetup, z, law: Optional[List[Tuple[Tuple[int, ...], float]]] = None):
    """The expectation above at z (scalar or array)"""
    z = np.asarray(z, dtype=complex)
    law = law if law is not None else step_law(setup)
    x = setup.x.as_array()
    theta = setup.theta
    bz, bz_shift = setup.b_map(z), setup.b_map(z + theta)
    den = bz[..., None] - setup.b_map(x)
    if np.any(np.abs(den) < POLE_TOL):
        raise PoleError(f"z collides with a particle of {tuple(x)}")
    plus, minus = setup.phi_plus(z), setup.phi_minus(z)
    out = np.zeros_like(bz)
    for e, p in law:
        if p == 0:
            continue
        moved = setup.b_map(x + theta * np.array(e))
        up = np.prod((bz_shift[..., None] - moved) / den, axis=-1)
        stay = np.prod((bz[..., None] - moved) / den, axis=-1)
        out = out + p * (plus * up + minus * stay)
    return complex(out) if out.ndim == 0 else out


def contour_integral(
    setup: LoopSetup,
    center: complex,
    radius: float,
    nodes: int = None,
    law: Optional[List[Tuple[Tuple[int, ...], float]]] = None,
) -> complex:
    """Trapezoid rule for ∮ observable dz on |z − center| = radius"""
    nodes = nodes or settings.CONTOUR_NODES
    phase = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    z = center + radius * phase
    values = loop_observable(setup, z, law)
    return complex(np.sum(values * 1j * radius * phase) * 2 * np.pi / nodes)


def residue_report(setup: LoopSetup, radius: float = None, nodes: int = None, tol: float = 1e-9) -> LoopReport:
    """Small circles around each particle plus two circles around the whole configuration"""
    radius = radius or settings.CONTOUR_RADIUS
    x = setup.x.as_array()
    gaps = -np.diff(x)
    if gaps.size and radius >= gaps.min() / 2:
        raise WalkError(f"contour radius {radius} overlaps neighbouring particles (min gap {gaps.min()})")
    law = step_law(setup)
    residues = tuple(abs(contour_integral(setup, complex(xj), radius, nodes, law)) for xj in x)
    center = complex((x[0] + x[-1]) / 2)
    half = (x[0] - x[-1]) / 2
    inner, outer = half + 0.5, half + 1.0
    if outer >= setup.b_map.injectivity_radius:
        raise PoleError(f"enclosing radius {outer} reaches the period of the q^z map")
    i_inner = contour_integral(setup, center, inner, nodes, law)
    i_outer = contour_integral(setup, center, outer, nodes, law)
    gap = abs(i_inner - i_outer)
    max_residue = max(residues)
    report = LoopReport(
        label=setup.label,
        n=setup.n,
        theta=setup.theta,
        b_map=setup.b_map.kind,
        residues=residues,
        max_residue=max_residue,
        enclosing=(abs(i_inner), abs(i_outer)),
        deformation_gap=gap,
        tolerance=tol,
        passed=max_residue < tol and gap < tol,
    )
    logger.debug(f"Loop: residues checked - label={setup.label} N={setup.n} max={max_residue:.3e} gap={gap:.3e}")
    return report


def run_loop_corpus(
    count: int = 50,
    seed: int = 0,
    maps: Sequence[str] = ("identity", "q"),
    n_max: int = 6,
    threads: int = None,
    tol: float = 1e-9,
) -> LoopCorpusReport:
    """Randomized setups, residue-checked in a thread pool"""
    rng = np.random.default_rng(seed)
    setups = [random_loop_setup(rng, n_max=n_max, maps=maps, label=f"case-{k}") for k in range(count)]
    with ThreadPoolExecutor(max_workers=threads or settings.MAX_THREADS) as pool:
        reports = tuple(pool.map(lambda s: residue_report(s, tol=tol), setups))
    max_residue = max(r.max_residue for r in reports)
    max_gap = max(r.deformation_gap for r in reports)
    passed = all(r.passed for r in reports)
    level = logging.INFO if passed else logging.WARNING
    logger.log(level, f"Loop: corpus done - count={count} seed={seed} max_residue={max_residue:.3e} passed={passed}")
    return LoopCorpusReport(
        seed=seed, count=count, reports=reports, max_residue=max_residue,
        max_deformation_gap=max_gap, tolerance=tol, passed=passed,
    )


def _stieltjes(h: BoundaryProfile, z: complex, nodes: int) -> complex:
    """∫ ρ(s)/(z − s) ds cell by cell, ρ = h'"""
    total = 0j
    for a, b, rho in zip(h.xs[:-1], h.xs[1:], h.density()):
        if rho <= 0:
            continue
        re, _ = integrate.quad(lambda s: (1 / (z - s)).real, a, b, limit=nodes)
        im, _ = integrate.quad(lambda s: (1 / (z - s)).imag, a, b, limit=nodes)
        total += rho * complex(re, im)
    return total


def b_function(phi_plus: AnalyticWeight, phi_minus: AnalyticWeight, h: BoundaryProfile, z: complex, nodes: int = 200) -> complex:
    """ℬ(z) = 𝒢(z)φ+(z) + φ−(z) with 𝒢(z) = exp[θ∫ρ(s)/(z − s) ds], z off the support"""
    z = complex(z)
    lo, hi = h.xs[0], h.xs[-1]
    if abs(z.imag) < POLE_TOL and lo <= z.real <= hi:
        raise PoleError(f"z={z} lies on the support [{lo}, {hi}]")
    g = np.exp(h.theta * _stieltjes(h, z, nodes))
    return complex(g * phi_plus(z) + phi_minus(z))
