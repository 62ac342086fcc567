"""Jack and Macdonald polynomials at principal specializations, skew values by path sums.

Skew values are defined through walk ensembles: for μ ⊆ λ with at most N rows,

    J_{λ'/μ'}(b_0, ..., b_{T-1}; 1/θ) = [J_μ(1^N) / J_λ(1^N)] · Σ_p W(p; b)

summed over walks from the configuration of μ to the configuration of λ, and
the same with q-weights and P_μ/P_λ at (1, t, ..., t^{N-1}) for Macdonald.
At θ = 1 both reduce to skew Schur functions, checked against Jacobi-Trudi.
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from config import settings
from models.lattice import BoundaryProfile, YoungDiagram
from models.symfun import PolyValue, QParams
from models.weights import DriftProfile
from utils.exact import Scalar, as_scalar, is_exact
from walks.errors import ConsistencyError, PoleError, WalkError
from walks.lattice import diagram_to_config, feasible_steps, path_feasible
from walks.sampler import path_partition_function
from walks.surface import free_entropy, free_entropy_q

logger = logging.getLogger("ThetaWalks")


def _check_q(q: float) -> float:
    if not 0 < q < 1:
        raise WalkError(f"q must lie in (0, 1), got {q}")
    return q


_POWER_BLOCK = 1 << 20


def _term_count(scale: float, q: float, tol: float) -> int:
    """Number of k with scale · q^k / (1 − q) ≥ tol"""
    if scale == 0 or scale / (1 - q) < tol:
        return 0
    return int(math.floor(math.log(tol * (1 - q) / scale) / math.log(q))) + 1


@lru_cache(maxsize=4)
def _q_powers(q: float, size: int) -> np.ndarray:
    powers = np.power(q, np.arange(size, dtype=float))
    powers.flags.writeable = False
    return powers


def _powers(scale: float, q: float, tol: float) -> np.ndarray:
    """q^k for every k the truncated product keeps"""
    count = _term_count(scale, q, tol)
    size = -(-count // _POWER_BLOCK) * _POWER_BLOCK
    return _q_powers(q, size)[:count]


def _log_factors(a: float, qk: np.ndarray) -> Optional[Tuple[np.ndarray, int]]:
    """(ln|1 − a q^k| per k, number of negative factors); None when a factor vanishes"""
    x = -a * qk
    if x.size == 0 or x.min() > -1:
        return np.log1p(x), 0
    if np.any(x == -1):
        return None
    out = np.empty_like(x)
    inside = x > -1
    out[inside] = np.log1p(x[inside])
    out[~inside] = np.log(-1 - x[~inside])
    return out, int(np.count_nonzero(~inside))


def log_q_pochhammer(a: float, q: float, tol: float = None) -> Tuple[float, int]:
    """(ln|(a;q)_∞|, sign); sign 0 when a factor vanishes"""
    _check_q(q)
    tol = settings.POCHHAMMER_TOL if tol is None else tol
    factors = _log_factors(a, _powers(abs(a), q, tol))
    if factors is None:
        return -math.inf, 0
    logs, negative = factors
    return float(np.sum(logs)), -1 if negative % 2 else 1


def q_pochhammer(a: float, q: float) -> float:
    """(a; q)_∞"""
    log_value, sgn = log_q_pochhammer(a, q)
    return 0.0 if sgn == 0 else sgn * math.exp(log_value)


def log_q_pochhammer_ratio(a: float, b: float, q: float, tol: float = None) -> Tuple[float, int]:
    """(ln|(a;q)_∞/(b;q)_∞|, sign) with one shared truncation"""
    _check_q(q)
    tol = settings.POCHHAMMER_TOL if tol is None else tol
    qk = _powers(max(abs(a), abs(b)), q, tol)
    den = _log_factors(b, qk)
    if den is None:
        raise PoleError(f"(b;q) vanishes for b={b}, q={q}")
    num = _log_factors(a, qk)
    if num is None:
        return -math.inf, 0
    return float(np.sum(num[0] - den[0])), -1 if (num[1] + den[1]) % 2 else 1


def log_q_gamma(x: float, q: float) -> Tuple[float, int]:
    """ln|Γ_q(x)| and its sign, Γ_q(x) = (1−q)^{1−x} (q;q)_∞ / (q^x;q)_∞"""
    _check_q(q)
    if x <= 0 and float(x).is_integer():
        raise PoleError(f"q-Gamma has a pole at x={x}")
    log_ratio, sgn = log_q_pochhammer_ratio(q, q ** x, q)
    return (1 - x) * math.log(1 - q) + log_ratio, sgn


def q_gamma(x: float, q: float) -> float:
    log_value, sgn = log_q_gamma(x, q)
    return sgn * math.exp(log_value)


def _arm_leg(d: YoungDiagram):
    conj = d.transpose()
    for i, row in enumerate(d.rows):
        for j in range(row):
            yield i, j, row - j - 1, conj.row(j) - i - 1


def jack_principal_box(d: YoungDiagram, n: int, theta) -> Scalar:
    """Π_boxes (Nθ + (j−1) − θ(i−1)) / (a + θl + θ)"""
    theta = as_scalar(theta)
    value = Fraction(1) if is_exact(theta) else 1.0
    for i, j, arm, leg in _arm_leg(d):
        value *= (n * theta + j - theta * i) / (arm + theta * leg + theta)
    return value


def jack_principal_gamma(d: YoungDiagram, n: int, theta) -> float:
    """ln J_λ(1^N) from Π_{i<j} Γ(x_i−x_j+θ)/Γ(x_i−x_j) · Π_i Γ(θ)/Γ(iθ)"""
    theta = float(as_scalar(theta))
    x = np.array([d.row(i) - theta * i for i in range(n)])
    diffs = (x[:, None] - x[None, :])[np.triu_indices(n, k=1)]
    pairs = math.fsum(special.gammaln(diffs + theta) - special.gammaln(diffs))
    singles = math.fsum(special.gammaln(theta) - special.gammaln(theta * np.arange(1, n + 1)))
    return pairs + singles


def jack_principal(d: YoungDiagram, n: int, theta) -> PolyValue:
    """J_λ(1^N; θ) by the box product, checked against the Gamma-ratio form"""
    if d.length > n:
        return PolyValue.zero()
    box = jack_principal_box(d, n, theta)
    log_box = PolyValue.from_scalar(box).log_value
    log_gamma = jack_principal_gamma(d, n, theta)
    if not math.isclose(log_box, log_gamma, rel_tol=0, abs_tol=1e-10 * max(1.0, abs(log_box))):
        logger.error(f"ConsistencyError - Jack principal forms disagree - box={log_box} gamma={log_gamma}")
        raise ConsistencyError(f"Jack principal specialization: box form {log_box} vs Gamma form {log_gamma}")
    return PolyValue.from_scalar(box)


def macdonald_principal_pochhammer(d: YoungDiagram, n: int, qp: QParams) -> float:
    """ln P_λ(1, t, ..., t^{N−1}; q, t) from the infinite-product form"""
    q, t = qp.q, qp.t
    logs = [sum(i * d.row(i) for i in range(n)) * math.log(t)]
    for i in range(n):
        for j in range(i + 1, n):
            base = q ** (d.row(i) - d.row(j))
            num, s1 = log_q_pochhammer_ratio(base * t ** (j - i), base * t ** (j - i + 1), q)
            den, s2 = log_q_pochhammer_ratio(t ** (j - i + 1), t ** (j - i), q)
            if s1 * s2 != 1:
                raise ConsistencyError("non-positive factor in the Macdonald principal product")
            logs += [num, den]
    return math.fsum(logs)


def macdonald_principal_qgamma(d: YoungDiagram, n: int, qp: QParams) -> float:
    """ln of t^{Σ(i−1)λ_i} Π_{i<j} Γ_q(x_i−x_j+θ)/Γ_q(x_i−x_j) · Π_i Γ_q(θ)/Γ_q(iθ)"""
    q, theta = qp.q, qp.theta
    x = [d.row(i) - theta * i for i in range(n)]
    logs = [sum(i * d.row(i) for i in range(n)) * math.log(qp.t)]
    for i in range(n):
        for j in range(i + 1, n):
            logs.append(log_q_gamma(x[i] - x[j] + theta, q)[0] - log_q_gamma(x[i] - x[j], q)[0])
    g_theta = log_q_gamma(theta, q)[0]
    logs += [g_theta - log_q_gamma((i + 1) * theta, q)[0] for i in range(n)]
    return math.fsum(logs)


def macdonald_principal(d: YoungDiagram, n: int, qp: QParams) -> PolyValue:
    """P_λ(1, t, ..., t^{N−1}; q, t), Pochhammer form checked against the q-Gamma form"""
    if d.length > n:
        return PolyValue.zero()
    poch = macdonald_principal_pochhammer(d, n, qp)
    qgam = macdonald_principal_qgamma(d, n, qp)
    if not math.isclose(poch, qgam, rel_tol=0, abs_tol=1e-9 * max(1.0, abs(poch))):
        logger.error(f"ConsistencyError - Macdonald principal forms disagree - pochhammer={poch} qgamma={qgam}")
        raise ConsistencyError(f"Macdonald principal specialization: {poch} vs {qgam}")
    return PolyValue(log_value=poch, sign=1)


def _skew_endpoints(lam: YoungDiagram, mu: YoungDiagram, n: int, theta):
    if not lam.contains(mu):
        raise WalkError(f"mu={mu.rows} is not contained in lambda={lam.rows}")
    if lam.length > n:
        raise WalkError(f"lambda has {lam.length} rows but N={n}")
    return diagram_to_config(mu, n, theta), diagram_to_config(lam, n, theta)


def skew_jack_pathsum(lam: YoungDiagram, mu: YoungDiagram, b: DriftProfile, n: int, theta) -> PolyValue:
    """J_{λ'/μ'}(b; 1/θ) as [J_μ(1^N)/J_λ(1^N)]·Σ_p W(p; b)"""
    theta = as_scalar(theta)
    y, z = _skew_endpoints(lam, mu, n, theta)
    if not path_feasible(y, z, b.horizon):
        return PolyValue.zero()
    total = path_partition_function(y, z, b.horizon, b)
    if not total.feasible:
        return PolyValue.zero()
    j_mu, j_lam = jack_principal(mu, n, theta), jack_principal(lam, n, theta)
    if total.exact is not None and j_mu.exact is not None and j_lam.exact is not None:
        return PolyValue.from_scalar(j_mu.exact / j_lam.exact * total.exact)
    return PolyValue(log_value=j_mu.log_value - j_lam.log_value + total.log_value, sign=1)


def skew_macdonald_pathsum(lam: YoungDiagram, mu: YoungDiagram, b: DriftProfile, n: int, qp: QParams) -> PolyValue:
    """P_{λ'/μ'}(b; t, q) as [P_μ/P_λ](1, t, ..., t^{N−1}) · Σ_p W̃(p; b)"""
    y, z = _skew_endpoints(lam, mu, n, qp.theta)
    if not path_feasible(y, z, b.horizon):
        return PolyValue.zero()
    total = path_partition_function(y, z, b.horizon, b, mode="q", q=qp.q)
    if not total.feasible:
        return PolyValue.zero()
    p_mu, p_lam = macdonald_principal(mu, n, qp), macdonald_principal(lam, n, qp)
    return PolyValue(log_value=p_mu.log_value - p_lam.log_value + total.log_value, sign=1)


def complete_homogeneous(b: Sequence[Scalar], k_max: int) -> List[Scalar]:
    """h_0..h_{k_max} of the finite alphabet b"""
    exact = is_exact(*b)
    h = [Fraction(1) if exact else 1.0] + [Fraction(0) if exact else 0.0] * k_max
    for v in b:
        for k in range(1, k_max + 1):
            h[k] += v * h[k - 1]
    return h


def _det(matrix: List[List[Scalar]]) -> Scalar:
    """Fraction elimination when every entry is exact, LAPACK otherwise"""
    if not all(isinstance(v, Fraction) for row in matrix for v in row):
        return float(np.linalg.det(np.array(matrix, dtype=float)))
    m = [row[:] for row in matrix]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        pivot = max(range(c, n), key=lambda r: abs(m[r][c]))
        if m[pivot][c] == 0:
            return det * 0
        if pivot != c:
            m[c], m[pivot] = m[pivot], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            factor = m[r][c] / m[c][c]
            for k in range(c, n):
                m[r][k] -= factor * m[c][k]
    return det


def schur_skew_jt(lam: YoungDiagram, mu: YoungDiagram, b: Sequence) -> PolyValue:
    """det(h_{λ_i − μ_j − i + j}(b)) over ℓ(λ) rows"""
    if not lam.contains(mu):
        return PolyValue.zero()
    b = [as_scalar(v) for v in b]
    size = lam.length
    if size == 0:
        return PolyValue.from_scalar(Fraction(1))
    h = complete_homogeneous(b, lam.row(0) + size)

    def entry(k: int) -> Scalar:
        return h[k] if 0 <= k < len(h) else h[0] * 0

    matrix = [[entry(lam.row(i) - mu.row(j) - i + j) for j in range(size)] for i in range(size)]
    return PolyValue.from_scalar(_det(matrix))


def branching_sum(mu: YoungDiagram, n: int, theta, b) -> Scalar:
    """Σ_λ (1+b)^{−N}·(J_λ/J_μ)(1^N)·J_{λ'/μ'}(b) over one-step extensions λ = μ + e"""
    theta = as_scalar(theta)
    b = as_scalar(b)
    x = diagram_to_config(mu, n, theta)
    drift = DriftProfile(b=(b,))
    total = Fraction(0) if is_exact(theta, b) else 0.0
    j_mu = jack_principal(mu, n, theta)
    for e in feasible_steps(x.positions, theta):
        lam = YoungDiagram(rows=tuple(mu.row(i) + e[i] for i in range(n)))
        j_lam = jack_principal(lam, n, theta)
        skew = skew_jack_pathsum(lam, mu, drift, n, theta)
        if j_lam.exact is not None and j_mu.exact is not None and skew.exact is not None:
            total += j_lam.exact / j_mu.exact * skew.exact / (1 + b) ** n
        else:
            total += math.exp(j_lam.log_value - j_mu.log_value + skew.log_value - n * math.log(1 + float(b)))
    return total


def jack_principal_limit(h: BoundaryProfile, theta: float) -> float:
    """(1/(2θ))∬ ln|x−y| dh dh − θ ln θ / 2 + 3θ/4"""
    return free_entropy(h, theta) / (2 * theta) - theta * math.log(theta) / 2 + 0.75 * theta


def _moments(h: BoundaryProfile) -> Tuple[float, float]:
    """(∫ x dh(x), ∫ x h(x) dh(x)) on the piecewise-linear profile"""
    gx, gw = np.polynomial.legendre.leggauss(4)
    first = second = 0.0
    for a, b, rho in zip(h.xs[:-1], h.xs[1:], h.density()):
        if rho <= 0:
            continue
        nodes = (a + b) / 2 + (b - a) / 2 * gx
        weights = rho * (b - a) / 2 * gw
        first += float(np.sum(weights * nodes))
        second += float(np.sum(weights * nodes * h.at(nodes)))
    return first, second


def macdonald_principal_limit(h: BoundaryProfile, theta: float, kappa: float) -> float:
    """Limit of (1/N²) ln P_λ(1, t, ..., t^{N−1}) for q = e^{κ/N}, one-dimensional integrals over [0, 1]"""
    if kappa >= 0:
        raise WalkError(f"kappa must be negative, got {kappa}")
    first, _ = integrate.quad(lambda x: x * math.log(-math.expm1(kappa * theta * x)), 0, 1, limit=200)
    second, _ = integrate.quad(lambda x: (1 - x) * x / math.expm1(-kappa * theta * x) if x > 0 else -1 / (kappa * theta), 0, 1, limit=200)
    m1, m2 = _moments(h)
    # t^{Σ(i−1)λ_i} with particle i at height θ(1 − (i−1)/N)
    prefactor = kappa * m1 - kappa / theta * m2 + kappa * theta ** 2 / 3
    return free_entropy_q(h, kappa, theta) / (2 * theta) - theta * first - kappa * theta ** 2 * second + prefactor
