"""Transfer-matrix dynamic programming over reachable configurations.

States at time t are displacement tuples d with x(t) = y + d. Layers are
dictionaries state -> mass; exact layers hold Fractions, float layers are
rescaled so that their largest mass is 1 and the log of the scale is carried
alongside. ``ArrayTransfer`` runs the same float recursion on numpy layers
when only the final mass is needed.
"""
import itertools
import logging
import math
from collections import defaultdict
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from models.lattice import HeightField, ParticleConfig
from models.weights import DriftProfile
from utils.exact import Scalar, is_exact, log_abs, nearest_int
from walks.errors import EnumerationCapError, InfeasibleEndpointsError, StateExplosionError, WalkError
from walks.lattice import _check_pair, displacements, feasible_steps, path_feasible
from walks.weights import MODES, _check_q, step_normalization, step_weight

logger = logging.getLogger("ThetaWalks")

State = Tuple[int, ...]
Layer = Dict[State, Scalar]


def config_key(y: ParticleConfig, state: State) -> str:
    """Leftmost displacement followed by the gap excesses, e.g. ``"2:0,1"``"""
    gaps = [
        int(round(y.positions[i] + state[i] - y.positions[i + 1] - state[i + 1] - y.theta))
        for i in range(len(state) - 1)
    ]
    return f"{state[-1]}:" + ",".join(str(g) for g in gaps)


class HeightCorridor:
    """Node-wise test |H_emp − H*| ≤ eps at integer times.

    Between the starts of two consecutive particles the empirical height is a
    count of finished particles plus one growing segment, so each piece is
    checked once per (time, count, start, end) and memoized.
    """

    def __init__(self, H_star: HeightField, eps: float, n_scale: int, theta: float):
        if eps <= 0:
            raise WalkError(f"eps must be positive, got {eps}")
        self.H_star = H_star
        self.eps = eps
        self.n_scale = n_scale
        self.width = theta / n_scale
        self.xs = H_star.xs
        self._columns: Dict[int, np.ndarray] = {}
        self._memo: Dict[tuple, bool] = {}
        self._tables_memo: Dict[tuple, tuple] = {}

    def _column(self, t: int) -> np.ndarray:
        col = self._columns.get(t)
        if col is None:
            col = np.asarray(self.H_star.column(t / self.n_scale))
            self._columns[t] = col
        return col

    def _segment(self, t: int, finished: int, start: float, lo: float, hi: float) -> bool:
        key = (t, finished, start, lo, hi)
        hit = self._memo.get(key)
        if hit is None:
            a = 0 if lo == -math.inf else int(np.searchsorted(self.xs, lo, side="left"))
            b = self.xs.size if hi == math.inf else int(np.searchsorted(self.xs, hi, side="left"))
            if a >= b:
                hit = True
            else:
                nodes = self.xs[a:b]
                emp = finished * self.width + np.clip(nodes - start, 0.0, self.width)
                hit = bool(np.max(np.abs(emp - self._column(t)[a:b])) <= self.eps + 1e-12)
            self._memo[key] = hit
        return hit

    def accepts(self, t: int, positions: Sequence[Scalar]) -> bool:
        p = [round(float(v) / self.n_scale, 12) for v in positions]
        n = len(p)
        if not self._segment(t, 0, p[-1], -math.inf, p[-1]):
            return False
        for k in range(n - 1, 0, -1):
            # nodes in [p[k], p[k-1]): particles k+1..n-1 (0-based) are complete
            if not self._segment(t, n - 1 - k, p[k], p[k], p[k - 1]):
                return False
        return self._segment(t, n - 1, p[0], p[0], math.inf)

    def _tables(self, t: int, base: Tuple[Scalar, ...], top: int):
        """``accepts`` tabulated per piece over displacements 0..top of the particles bounding it"""
        key = (t, base, top)
        tables = self._tables_memo.get(key)
        if tables is None:
            n = len(base)
            p = [[round(float(b + d) / self.n_scale, 12) for d in range(top + 1)] for b in base]
            left = np.array([self._segment(t, 0, v, -math.inf, v) for v in p[-1]])
            right = np.array([self._segment(t, n - 1, v, v, math.inf) for v in p[0]])
            pieces = [
                np.array([[self._segment(t, n - 1 - k, a, a, b) for b in p[k - 1]] for a in p[k]])
                for k in range(1, n)
            ]
            tables = (left, right, pieces)
            self._tables_memo[key] = tables
        return tables

    def admits(self, t: int, base: Tuple[Scalar, ...], disp: np.ndarray, top: int) -> np.ndarray:
        """Row-wise ``accepts`` for positions base + disp, displacements in 0..top"""
        left, right, pieces = self._tables(t, base, top)
        ok = left[disp[:, -1]] & right[disp[:, 0]]
        for k, table in enumerate(pieces, start=1):
            ok &= table[disp[:, k], disp[:, k - 1]]
        return ok


class TransferEngine:
    """Forward/backward passes of kernel masses or path weights from ``y``.

    With ``z`` given, states are pruned to the per-particle window
    z_i − (T − t) ≤ x_i ≤ z_i. With ``normalized`` the step masses are kernel
    probabilities, otherwise raw weights ratio·b^{|e|}.
    """

    def __init__(
        self,
        y: ParticleConfig,
        T: int,
        drift: Optional[DriftProfile] = None,
        mode: str = "plain",
        q: Optional[float] = None,
        normalized: bool = True,
        z: Optional[ParticleConfig] = None,
        corridor: Optional[HeightCorridor] = None,
    ):
        if mode not in MODES:
            raise WalkError(f"unknown kernel mode {mode!r}")
        if T < 0:
            raise WalkError(f"horizon must be non-negative, got {T}")
        self.drift = drift or DriftProfile.ones(T)
        if self.drift.horizon != T:
            raise WalkError(f"drift has {self.drift.horizon} steps but T={T}")
        self.q = _check_q(q) if mode == "q" else None
        self.y = y
        self.T = T
        self.mode = mode
        self.normalized = normalized
        self.corridor = corridor
        self.theta = y.theta
        self.exact = mode == "plain" and is_exact(y.theta, *y.positions, *self.drift.b)
        self.target: Optional[State] = None
        if z is not None:
            _check_pair(y, z)
            if not path_feasible(y, z, T):
                logger.error(f"LogicError - infeasible endpoints - y={y.positions} z={z.positions} T={T}")
                raise InfeasibleEndpointsError(f"no walk from {y.positions} to {z.positions} in T={T}")
            self.target = displacements(y, z)
        self._norms = [
            step_normalization(y.n, self.theta, b, mode, self.q) if normalized else 1
            for b in self.drift.b
        ]
        self._edges: Dict[Tuple[int, State], List[Tuple[State, Scalar]]] = {}
        self.forward_layers: List[Layer] = []
        self.forward_scales: List[float] = []
        self.backward_layers: List[Layer] = []
        self.backward_scales: List[float] = []

    @property
    def _one(self) -> Scalar:
        return Fraction(1) if self.exact else 1.0

    def positions(self, state: State) -> Tuple[Scalar, ...]:
        return tuple(p + d for p, d in zip(self.y.positions, state))

    def _allowed(self, t: int, state: State):
        if self.target is None:
            return None
        remaining = self.T - t - 1
        return [
            tuple(v for v in (0, 1) if 0 <= goal - d - v <= remaining)
            for d, goal in zip(state, self.target)
        ]

    def edges(self, t: int, state: State) -> List[Tuple[State, Scalar]]:
        key = (t, state)
        out = self._edges.get(key)
        if out is None:
            pos = self.positions(state)
            b = self.drift.b[t]
            norm = self._norms[t]
            out = []
            for e in feasible_steps(pos, self.theta, self._allowed(t, state)):
                w = step_weight(pos, self.theta, e, b, self.mode, self.q, self.exact)
                out.append((tuple(d + v for d, v in zip(state, e)), w / norm))
            self._edges[key] = out
        return out

    def _rescale(self, layer: Layer) -> Tuple[Layer, float]:
        if self.exact or not layer:
            return layer, 0.0
        top = max(layer.values())
        if top <= 0:
            return {}, 0.0
        return {s: m / top for s, m in layer.items()}, math.log(top)

    def _admit(self, t: int, state: State) -> bool:
        return self.corridor is None or self.corridor.accepts(t, self.positions(state))

    def forward(self) -> List[Layer]:
        start: State = (0,) * self.y.n
        layers: List[Layer] = [{start: self._one} if self._admit(0, start) else {}]
        scales = [0.0]
        total_states = len(layers[0])
        counts = {0: total_states}
        for t in range(self.T):
            nxt: Layer = defaultdict(lambda: Fraction(0) if self.exact else 0.0)
            for state, mass in layers[-1].items():
                for child, w in self.edges(t, state):
                    nxt[child] += mass * w
            kept = {s: m for s, m in nxt.items() if m != 0 and self._admit(t + 1, s)}
            kept, scale = self._rescale(kept)
            layers.append(kept)
            scales.append(scales[-1] + scale)
            total_states += len(kept)
            counts[t + 1] = len(kept)
            logger.debug(f"Transfer: layer t={t + 1} states={len(kept)}")
            if total_states > settings.STATE_CAP:
                logger.error(f"LogicError - state explosion - states={total_states} cap={settings.STATE_CAP}")
                raise StateExplosionError(
                    f"transfer matrix reached {total_states} states (cap {settings.STATE_CAP}) at t={t + 1}",
                    counts=counts,
                )
        self.forward_layers, self.forward_scales = layers, scales
        return layers

    def backward(self) -> List[Layer]:
        """Completion masses to the target, restricted to forward-reachable states"""
        if self.target is None:
            raise WalkError("backward pass needs a target configuration")
        if not self.forward_layers:
            self.forward()
        layers: List[Layer] = [dict() for _ in range(self.T + 1)]
        scales = [0.0] * (self.T + 1)
        if self.target in self.forward_layers[self.T]:
            layers[self.T] = {self.target: self._one}
        for t in range(self.T - 1, -1, -1):
            after = layers[t + 1]
            layer: Layer = {}
            for state in self.forward_layers[t]:
                mass = sum((w * after[c] for c, w in self.edges(t, state) if c in after), Fraction(0) if self.exact else 0.0)
                if mass != 0:
                    layer[state] = mass
            layers[t], scale = self._rescale(layer)
            scales[t] = scales[t + 1] + scale
        self.backward_layers, self.backward_scales = layers, scales
        return layers

    def total(self) -> Tuple[float, Optional[Scalar]]:
        """(log mass, exact mass or None) of the endpoint event, or of all paths without a target"""
        if not self.forward_layers:
            self.forward()
        last = self.forward_layers[self.T]
        if self.target is not None:
            mass = last.get(self.target, 0)
        else:
            mass = sum(last.values(), Fraction(0) if self.exact else 0.0)
        log_mass = log_abs(mass) + self.forward_scales[self.T] if mass else -math.inf
        return log_mass, (mass if self.exact else None)

    def marginals(self, t: int) -> Layer:
        """Conditional law of x(t) given the endpoint (and corridor) event"""
        if not self.backward_layers:
            self.backward()
        alpha, beta = self.forward_layers[t], self.backward_layers[t]
        joint = {s: alpha[s] * beta[s] for s in alpha if s in beta}
        norm = sum(joint.values(), Fraction(0) if self.exact else 0.0)
        if norm == 0:
            return {}
        return {s: m / norm for s, m in joint.items()}

    def layer_sizes(self) -> Tuple[int, ...]:
        return tuple(len(layer) for layer in self.forward_layers)


class ArrayTransfer:
    """Float forward pass over whole layers at once.

    A layer is a matrix of displacement rows with a vector of rescaled masses.
    The log weight of every step vector from every row comes out of two matrix
    products over the N(N−1)/2 particle pairs, and the window and packed-pair
    exclusions out of a third. Children are merged by their mixed-radix key.
    Only the endpoint (and corridor) mass is kept, not the layers.
    """

    def __init__(
        self,
        y: ParticleConfig,
        T: int,
        drift: Optional[DriftProfile] = None,
        mode: str = "plain",
        q: Optional[float] = None,
        z: Optional[ParticleConfig] = None,
        corridor: Optional[HeightCorridor] = None,
    ):
        if mode not in MODES:
            raise WalkError(f"unknown kernel mode {mode!r}")
        if T < 0:
            raise WalkError(f"horizon must be non-negative, got {T}")
        if y.n > settings.ENUMERATION_CAP:
            raise EnumerationCapError(f"N={y.n} is above the enumeration cap {settings.ENUMERATION_CAP}")
        self.drift = drift or DriftProfile.ones(T)
        if self.drift.horizon != T:
            raise WalkError(f"drift has {self.drift.horizon} steps but T={T}")
        self.q = _check_q(q) if mode == "q" else None
        self.y, self.T, self.mode, self.corridor = y, T, mode, corridor
        self.theta = float(y.theta)
        n = y.n
        self.target: Optional[np.ndarray] = None
        if z is not None:
            _check_pair(y, z)
            if not path_feasible(y, z, T):
                logger.error(f"LogicError - infeasible endpoints - y={y.positions} z={z.positions} T={T}")
                raise InfeasibleEndpointsError(f"no walk from {y.positions} to {z.positions} in T={T}")
            self.target = np.array(displacements(y, z), dtype=np.int64)
        # integer part of x_i − x_j is offset_i − offset_j + d_i − d_j
        gaps = [nearest_int(y.positions[i] - y.positions[i + 1] - y.theta) for i in range(n - 1)]
        self.offset = -np.concatenate(([0], np.cumsum(gaps))).astype(np.int64)
        self.pi, self.pj = np.triu_indices(n, k=1)
        self.steps = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)
        sgn = self.steps[:, self.pi] - self.steps[:, self.pj]
        self.up = (sgn == 1).T.astype(float)
        self.down = (sgn == -1).T.astype(float)
        blocked = (self.steps[:, :-1] == 0) & (self.steps[:, 1:] == 1)
        self.exclusions = np.vstack([1 - self.steps.T, self.steps.T, blocked.T]).astype(float)
        self.radix = T + 1
        self.place = self.radix ** np.arange(n, dtype=np.int64)
        self.step_keys = self.steps @ self.place
        self.step_sizes = self.steps.sum(axis=1)
        self.q_shift = self.theta * math.log(self.q) * (self.steps @ np.arange(n)) if mode == "q" else 0.0
        self.rows_per_chunk = max(1, settings.ARRAY_CHUNK // len(self.steps))
        self.layer_sizes: List[int] = []

    def _pair_logs(self, disp: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """ln of the ±θ pair factors per row; the −θ factor is 0 where a packed pair would cross"""
        u = disp + self.offset
        whole = (u[:, self.pi] - u[:, self.pj]).astype(float)
        span = (self.pj - self.pi).astype(float)
        delta = span * self.theta + whole
        lower = (span - 1) * self.theta + whole
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.mode == "q":
                ln_q = math.log(self.q)
                base = np.expm1(delta * ln_q)
                up = np.log(np.expm1((delta + self.theta) * ln_q) / base)
                down = np.log(np.expm1(lower * ln_q) / base)
            else:
                up = np.log1p(self.theta / delta)
                down = np.log(lower / delta)
        return up, np.where(lower > 0, down, 0.0)

    def _violations(self, t: int, disp: np.ndarray) -> np.ndarray:
        n = disp.shape[1]
        if self.target is None:
            must = np.zeros_like(disp, dtype=float)
            cannot = np.zeros_like(disp, dtype=float)
        else:
            left = self.target - disp
            must = (left > self.T - t - 1).astype(float)
            cannot = (left < 1).astype(float)
        u = disp + self.offset
        packed = (u[:, : n - 1] - u[:, 1:] == 0).astype(float)
        return np.hstack([must, cannot, packed]) @ self.exclusions

    def _expand(self, t: int, disp: np.ndarray, mass: np.ndarray, keys: np.ndarray, const: np.ndarray):
        up, down = self._pair_logs(disp)
        log_w = up @ self.up + down @ self.down + const
        valid = self._violations(t, disp) == 0
        child = mass[:, None] * np.exp(log_w)
        child_keys = keys[:, None] + self.step_keys[None, :]
        keep = valid & (child > 0)
        return _merge(child_keys[keep], child[keep])

    def _decode(self, keys: np.ndarray) -> np.ndarray:
        return (keys[:, None] // self.place[None, :]) % self.radix

    def run(self) -> float:
        """ln of the total kernel mass of the endpoint (and corridor) event"""
        n = self.y.n
        disp = np.zeros((1, n), dtype=np.int64)
        mass = np.ones(1)
        keys = np.zeros(1, dtype=np.int64)
        if self.corridor is not None and not self.corridor.admits(0, self.y.positions, disp, self.T)[0]:
            return -math.inf
        log_scale = 0.0
        self.layer_sizes = [1]
        for t in range(self.T):
            b = self.drift.b[t]
            norm = step_normalization(n, self.y.theta, b, self.mode, self.q)
            const = self.step_sizes * math.log(float(b)) - math.log(float(norm)) + self.q_shift
            parts_keys, parts_mass, pending = [], [], 0
            for start in range(0, len(keys), self.rows_per_chunk):
                stop = start + self.rows_per_chunk
                k, m = self._expand(t, disp[start:stop], mass[start:stop], keys[start:stop], const)
                parts_keys.append(k)
                parts_mass.append(m)
                pending += len(k)
                if pending > 4 * settings.ARRAY_CHUNK:
                    k, m = _merge(np.concatenate(parts_keys), np.concatenate(parts_mass))
                    parts_keys, parts_mass, pending = [k], [m], len(k)
            keys, mass = _merge(np.concatenate(parts_keys), np.concatenate(parts_mass))
            disp = self._decode(keys)
            if self.corridor is not None and len(keys):
                inside = self.corridor.admits(t + 1, self.y.positions, disp, self.T)
                keys, mass, disp = keys[inside], mass[inside], disp[inside]
            self.layer_sizes.append(len(keys))
            logger.debug(f"Transfer: array layer t={t + 1} states={len(keys)}")
            if len(keys) > settings.ARRAY_LAYER_CAP:
                logger.error(f"LogicError - state explosion - states={len(keys)} cap={settings.ARRAY_LAYER_CAP}")
                raise StateExplosionError(
                    f"array transfer reached {len(keys)} states (cap {settings.ARRAY_LAYER_CAP}) at t={t + 1}",
                    counts=dict(enumerate(self.layer_sizes)),
                )
            if not len(keys):
                return -math.inf
            top = float(mass.max())
            mass = mass / top
            log_scale += math.log(top)
        if self.target is None:
            return log_scale + math.log(float(mass.sum()))
        hit = np.flatnonzero(keys == int(self.target @ self.place))
        return log_scale + math.log(float(mass[hit[0]])) if hit.size else -math.inf


def _merge(keys: np.ndarray, mass: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sum masses sharing a key; keys come back sorted"""
    unique, inverse = np.unique(keys, return_inverse=True)
    return unique, np.bincount(inverse.ravel(), weights=mass, minlength=len(unique))
