"""Vandermonde-ratio step weights, path weights and the three transition kernels."""
import itertools
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

from config import settings
from models.lattice import ParticleConfig, WalkEnsemble
from models.weights import DriftProfile, PathWeight, RatioBounds, StepWeight
from utils.exact import Scalar, as_scalar, is_exact, log_abs
from walks.errors import ConsistencyError, EnumerationCapError, WalkError
from walks.lattice import feasible_steps, packed_pairs, step_feasible

logger = logging.getLogger("ThetaWalks")

MODES = ("plain", "q")


def q_from_kappa(kappa: float, n: int) -> float:
    """q = e^{κ/N} with κ < 0"""
    if kappa >= 0:
        raise WalkError(f"kappa must be negative, got {kappa}")
    return math.exp(kappa / n)


def _check_b(b) -> Scalar:
    b = as_scalar(b)
    if b <= 0:
        logger.error(f"ValidationError - non-positive drift - b={b}")
        raise WalkError(f"drift b must be positive, got {b}")
    return b


def _check_q(q: float) -> float:
    q = float(q)
    if not 0 < q < 1:
        logger.error(f"ValidationError - q outside (0,1) - q={q}")
        raise WalkError(f"q must lie in (0, 1), got {q}")
    return q


def _feasible(positions: Sequence[Scalar], theta: Scalar, e: Sequence[int]) -> bool:
    packed = packed_pairs(positions, theta)
    return not any(packed[i] and e[i] == 0 and e[i + 1] == 1 for i in range(len(e) - 1))


def ratio_value(positions: Sequence[Scalar], theta: Scalar, e: Sequence[int]) -> Scalar:
    """Π_{i<j} ((x_i+θe_i) − (x_j+θe_j))/(x_i − x_j) for a feasible e.

    Pairs with e_i = e_j contribute 1 and are skipped.
    """
    exact = is_exact(theta, *positions)
    value = Fraction(1) if exact else 1.0
    n = len(positions)
    for i in range(n):
        for j in range(i + 1, n):
            if e[i] != e[j]:
                d = positions[i] - positions[j]
                value *= (d + theta * (e[i] - e[j])) / d
    return value


def ratio_log(positions: Sequence[Scalar], theta: Scalar, e: Sequence[int]) -> float:
    terms = []
    n = len(positions)
    theta_f = float(theta)
    for i in range(n):
        for j in range(i + 1, n):
            if e[i] != e[j]:
                d = float(positions[i] - positions[j])
                terms.append(math.log1p(theta_f * (e[i] - e[j]) / d))
    return math.fsum(terms)


def q_ratio_log(positions: Sequence[Scalar], theta: Scalar, e: Sequence[int], q: float) -> float:
    """ln Π_{i<j} (q^{x_i+θe_i} − q^{x_j+θe_j})/(q^{x_i} − q^{x_j}) in expm1 form"""
    ln_q = math.log(q)
    theta_f = float(theta)
    n = len(positions)
    terms = []
    for i in range(n):
        for j in range(i + 1, n):
            a = float(positions[i] - positions[j])
            shifted = a + theta_f * (e[i] - e[j])
            terms.append(theta_f * e[j] * ln_q)
            if shifted != a:
                terms.append(math.log(math.expm1(shifted * ln_q) / math.expm1(a * ln_q)))
    return math.fsum(terms)


def vandermonde_ratio(x: ParticleConfig, e: Sequence[int]) -> StepWeight:
    """V(x+θe)/V(x); feasibility is settled before any division"""
    if not step_feasible(x, e):
        return StepWeight.infeasible()
    if is_exact(x.theta, *x.positions):
        value = ratio_value(x.positions, x.theta, e)
        return StepWeight(value=value, log_value=log_abs(value), feasible=True)
    log_value = ratio_log(x.positions, x.theta, e)
    return StepWeight(value=math.exp(log_value), log_value=log_value, feasible=True)


def level_sum(x: ParticleConfig, k: int) -> Scalar:
    """Σ_{|e|=k} V(x+θe)/V(x) by enumeration; equals C(N, k)"""
    if x.n > settings.ENUMERATION_CAP:
        raise EnumerationCapError(
            f"N={x.n} is above the enumeration cap {settings.ENUMERATION_CAP}; "
            f"the level sum is C(N,k)={math.comb(x.n, k)} by the Vandermonde identity"
        )
    if not 0 <= k <= x.n:
        raise WalkError(f"level k={k} outside [0, {x.n}]")
    total = Fraction(0) if is_exact(x.theta, *x.positions) else 0.0
    for ones in itertools.combinations(range(x.n), k):
        e = [0] * x.n
        for i in ones:
            e[i] = 1
        if _feasible(x.positions, x.theta, e):
            total += ratio_value(x.positions, x.theta, e)
    return total


def kernel_plain(x: ParticleConfig, e: Sequence[int]) -> Scalar:
    """2^{−N} V(x+θe)/V(x)"""
    w = vandermonde_ratio(x, e)
    return w.value / 2 ** x.n if w.feasible else w.value


def kernel_drifted(x: ParticleConfig, e: Sequence[int], b) -> Scalar:
    """(1+b)^{−N} V(x+θe)/V(x) b^{|e|}"""
    b = _check_b(b)
    w = vandermonde_ratio(x, e)
    if not w.feasible:
        return w.value
    return w.value * b ** sum(e) / (1 + b) ** x.n


def macdonald_normalization(n: int, t: float, b: float) -> float:
    """Π_{i=1}^N (1 + b t^{i−1})"""
    return math.prod(1 + b * t ** i for i in range(n))


@lru_cache(maxsize=4096)
def _checked_macdonald_normalization(positions: Tuple[float, ...], theta: float, q: float, b: float) -> float:
    n = len(positions)
    t = q ** theta
    expected = macdonald_normalization(n, t, b)
    if n <= settings.MACDONALD_ORACLE_N:
        brute = math.fsum(
            math.exp(q_ratio_log(positions, theta, e, q)) * b ** sum(e)
            for e in feasible_steps(positions, theta)
        )
        if abs(brute - expected) > 1e-10 * expected:
            logger.error(f"ConsistencyError - Macdonald normalization - brute={brute} product={expected}")
            raise ConsistencyError(f"Macdonald normalization mismatch: {brute} vs {expected}")
    return expected


def kernel_macdonald(x: ParticleConfig, e: Sequence[int], q: float, b) -> float:
    """q-deformed step probability with normalization Π(1 + b t^{i−1}), t = q^θ"""
    q = _check_q(q)
    b = float(_check_b(b))
    if not step_feasible(x, e):
        return 0.0
    positions = tuple(float(p) for p in x.positions)
    norm = _checked_macdonald_normalization(positions, float(x.theta), q, b)
    return math.exp(q_ratio_log(x.positions, x.theta, e, q)) * b ** sum(e) / norm


def step_weight(
    positions: Sequence[Scalar],
    theta: Scalar,
    e: Sequence[int],
    b: Scalar,
    mode: str = "plain",
    q: Optional[float] = None,
    exact: bool = False,
) -> Scalar:
    """Unnormalized weight ratio·b^{|e|} of a feasible step"""
    if mode == "q":
        return math.exp(q_ratio_log(positions, theta, e, q)) * float(b) ** sum(e)
    if exact:
        return ratio_value(positions, theta, e) * b ** sum(e)
    return math.exp(ratio_log(positions, theta, e) + sum(e) * math.log(float(b)))


def step_normalization(n: int, theta: Scalar, b: Scalar, mode: str = "plain", q: Optional[float] = None) -> Scalar:
    if mode == "q":
        return macdonald_normalization(n, q ** float(theta), float(b))
    return (1 + b) ** n


def step_distribution(
    x: ParticleConfig,
    b=1,
    mode: str = "plain",
    q: Optional[float] = None,
) -> List[Tuple[Tuple[int, ...], Scalar]]:
    """Law of one step under the chosen kernel, feasible vectors only"""
    if mode not in MODES:
        raise WalkError(f"unknown kernel mode {mode!r}")
    if x.n > settings.ENUMERATION_CAP:
        raise EnumerationCapError(f"N={x.n} is above the enumeration cap {settings.ENUMERATION_CAP}")
    b = _check_b(b)
    if mode == "q":
        q = _check_q(q)
        norm = _checked_macdonald_normalization(tuple(float(p) for p in x.positions), float(x.theta), q, float(b))
        exact = False
    else:
        exact = is_exact(b, x.theta, *x.positions)
        norm = step_normalization(x.n, x.theta, b)
    return [
        (e, step_weight(x.positions, x.theta, e, b, mode, q, exact) / norm)
        for e in feasible_steps(x.positions, x.theta)
    ]


def path_weight(
    w: WalkEnsemble,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
) -> PathWeight:
    """Π_t ratio_t · b_t^{|e(t)|} accumulated in log space (exact in plain rational mode)"""
    drift = drift or DriftProfile.ones(w.horizon)
    if drift.horizon != w.horizon:
        raise WalkError(f"drift has {drift.horizon} steps but the walk has {w.horizon}")
    if mode == "q":
        q = _check_q(q)
    n = w.n
    pair_factors = n * (n - 1) // 2 * w.horizon
    exact = (
        mode == "plain"
        and is_exact(w.theta, *drift.b, *(p for cfg in w.steps for p in cfg.positions))
        and pair_factors <= settings.EXACT_PAIR_CAP
    )
    logs = []
    product = Fraction(1)
    for t, e in enumerate(w.step_vectors()):
        cfg = w.steps[t]
        if not _feasible(cfg.positions, cfg.theta, e):
            return PathWeight(log_value=-math.inf, feasible=False, exact=0 if exact else None)
        b = drift.b[t]
        k = sum(e)
        if mode == "q":
            logs.append(q_ratio_log(cfg.positions, cfg.theta, e, q))
        else:
            logs.append(ratio_log(cfg.positions, cfg.theta, e))
        if k:
            logs.append(k * log_abs(b))
        if exact:
            product *= ratio_value(cfg.positions, cfg.theta, e) * b ** k
    log_value = math.fsum(logs)
    return PathWeight(log_value=log_abs(product) if exact else log_value, feasible=True, exact=product if exact else None)


def ratio_bounds(configs: Iterable[ParticleConfig]) -> RatioBounds:
    """Largest feasible ratio (≤ 2^N) and the fitted c with every ratio ≥ c^N"""
    max_ratio, min_ratio, fitted, count, n_max = 0.0, math.inf, math.inf, 0, 0
    for x in configs:
        if x.n > settings.LOOP_ENUMERATION_CAP:
            raise EnumerationCapError(f"N={x.n} is above {settings.LOOP_ENUMERATION_CAP} for bound fitting")
        ratios = [float(ratio_value(x.positions, x.theta, e)) for e in feasible_steps(x.positions, x.theta)]
        top, bottom = max(ratios), min(ratios)
        if top > 2 ** x.n * (1 + 1e-12):
            raise ConsistencyError(f"ratio {top} exceeds 2^N for N={x.n}")
        max_ratio = max(max_ratio, top)
        min_ratio = min(min_ratio, bottom)
        fitted = min(fitted, bottom ** (1.0 / x.n))
        count += 1
        n_max = max(n_max, x.n)
    logger.info(f"Weights: ratio bounds fitted - configs={count} max={max_ratio:.4g} c={fitted:.4g}")
    return RatioBounds(max_ratio=max_ratio, min_ratio=min_ratio, fitted_c=fitted, configs=count, n_max=n_max)
