"""Exact forward sampling, exact path-space distributions and the corner-flip MCMC."""
import bisect
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import settings
from models.lattice import GridSpec, HeightField, ParticleConfig, WalkEnsemble
from models.sampler import ChainSummary, ExactDistribution, McmcState, TransferState
from models.weights import DriftProfile, PathWeight
from utils.exact import Scalar
from walks.errors import ConsistencyError, EnumerationCapError, WalkError
from walks.lattice import canonical_path, feasible_steps, height_grid, packed_pairs
from walks.transfer import ArrayTransfer, HeightCorridor, TransferEngine, config_key
from walks.weights import MODES, _check_q, path_weight, q_ratio_log, ratio_log, step_weight

logger = logging.getLogger("ThetaWalks")


def make_rng(seed) -> np.random.Generator:
    """Counter-based Philox stream; ``seed`` may be an int or a SeedSequence"""
    return np.random.Generator(np.random.Philox(seed))


def path_key(w: WalkEnsemble) -> str:
    """Step vectors joined per time, e.g. ``"10|01"``"""
    return "|".join("".join(str(v) for v in e) for e in w.step_vectors())


def _drift(drift: Optional[DriftProfile], T: int) -> DriftProfile:
    drift = drift or DriftProfile.ones(T)
    if drift.horizon != T:
        raise WalkError(f"drift has {drift.horizon} steps but T={T}")
    return drift


def _forward_walk(
    y: ParticleConfig,
    T: int,
    drift: DriftProfile,
    mode: str,
    q: Optional[float],
    rng: np.random.Generator,
) -> WalkEnsemble:
    positions = list(y.positions)
    steps = [y]
    for t in range(T):
        choices = list(feasible_steps(positions, y.theta))
        weights = np.array([float(step_weight(positions, y.theta, e, drift.b[t], mode, q)) for e in choices])
        e = choices[int(rng.choice(len(choices), p=weights / weights.sum()))]
        positions = [p + v for p, v in zip(positions, e)]
        steps.append(ParticleConfig(positions=tuple(positions), theta=y.theta))
    return WalkEnsemble(steps=tuple(steps), theta=y.theta)


def sample_forward(
    y: ParticleConfig,
    T: int,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
    seed: int = 0,
) -> WalkEnsemble:
    """Exact draw of the forward Markov walk started from y"""
    if y.n > settings.ENUMERATION_CAP:
        raise EnumerationCapError(
            f"N={y.n} is above the enumeration cap {settings.ENUMERATION_CAP}; use sample_mcmc for bridges"
        )
    if mode not in MODES:
        raise WalkError(f"unknown kernel mode {mode!r}")
    q = _check_q(q) if mode == "q" else None
    walk = _forward_walk(y, T, _drift(drift, T), mode, q, make_rng(seed))
    logger.debug(f"Sampler: forward walk drawn - N={y.n} T={T} seed={seed}")
    return walk


def _schur_start(y: ParticleConfig, mode: str) -> bool:
    """θ = 1, plain kernel, densely packed start: the free walk is a Schur process"""
    return mode == "plain" and y.theta == 1 and all(packed_pairs(y.positions, y.theta))


def _schur_positions(y: ParticleConfig, T: int, drift: DriftProfile, rng: np.random.Generator) -> np.ndarray:
    """(T+1, N) positions from row insertion of a Bernoulli 0/1 matrix, one column per step.

    Column t holds the particles that receive a letter, each with probability b_t/(1+b_t).
    Letters of one column are inserted in decreasing order, so the shape grows by a
    vertical strip and particle i sits at y_i + λ_{i+1}(t).
    """
    n = y.n
    rows: List[List[int]] = [[] for _ in range(n)]
    base = np.asarray([float(p) for p in y.positions])
    out = np.empty((T + 1, n))
    out[0] = base
    for t in range(T):
        b = float(drift.b[t])
        letters = np.flatnonzero(rng.random(n) < b / (1 + b))
        for letter in letters[::-1]:
            x = int(letter)
            for row in rows:
                k = bisect.bisect_right(row, x)
                if k == len(row):
                    row.append(x)
                    break
                row[k], x = x, row[k]
        out[t + 1] = base + np.fromiter((len(row) for row in rows), dtype=float, count=n)
    return out


def sample_schur(
    y: ParticleConfig,
    T: int,
    drift: Optional[DriftProfile] = None,
    seed: int = 0,
) -> WalkEnsemble:
    """Exact forward draw for θ = 1 from a packed start, with no cap on N"""
    if not _schur_start(y, "plain"):
        raise WalkError("row insertion sampling needs theta=1 and a densely packed start")
    positions = _schur_positions(y, T, _drift(drift, T), make_rng(seed))
    shifts = np.rint(positions - positions[0]).astype(int)
    return _walk_from_states(y, [tuple(int(d) for d in row) for row in shifts])


def _walk_from_states(y: ParticleConfig, states: List[Tuple[int, ...]]) -> WalkEnsemble:
    return WalkEnsemble(
        steps=tuple(
            ParticleConfig(positions=tuple(p + d for p, d in zip(y.positions, s)), theta=y.theta)
            for s in states
        ),
        theta=y.theta,
    )


def _weighted_paths(
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    drift: Optional[DriftProfile],
    mode: str,
    q: Optional[float],
    limit: int,
) -> List[Tuple[WalkEnsemble, Scalar]]:
    engine = TransferEngine(y, T, _drift(drift, T), mode, q, normalized=False, z=z)
    found: List[Tuple[List[Tuple[int, ...]], Scalar]] = []
    trail = [(0,) * y.n]

    def walk(t: int, weight: Scalar):
        if t == T:
            if trail[-1] == engine.target:
                if len(found) >= limit:
                    raise EnumerationCapError(f"more than {limit} paths; use the transfer matrix instead")
                found.append((list(trail), weight))
            return
        for child, w in engine.edges(t, trail[-1]):
            trail.append(child)
            walk(t + 1, weight * w)
            trail.pop()

    walk(0, engine._one)
    return [(_walk_from_states(y, states), w) for states, w in found]


def enumerate_paths(y: ParticleConfig, z: ParticleConfig, T: int, limit: int = 100_000) -> List[WalkEnsemble]:
    """Every walk from y to z in T steps (small instances)"""
    return [w for w, _ in _weighted_paths(y, z, T, None, "plain", None, limit)]


def conditional_path_distribution(
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
    limit: int = 100_000,
) -> List[Tuple[WalkEnsemble, Scalar]]:
    paths = _weighted_paths(y, z, T, drift, mode, q, limit)
    total = sum(w for _, w in paths)
    if total == 0:
        return []
    return [(walk, w / total) for walk, w in paths]


def path_partition_function(
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
) -> PathWeight:
    """Σ_p W(p; b) over all walks from y to z"""
    engine = TransferEngine(y, T, _drift(drift, T), mode, q, normalized=False, z=z)
    log_value, exact = engine.total()
    return PathWeight(log_value=log_value, feasible=log_value > -math.inf, exact=exact)


def _layer_states(engine: TransferEngine, layer: Dict[Tuple[int, ...], Scalar]) -> Tuple[TransferState, ...]:
    return tuple(
        TransferState(
            config_index=k,
            config_key=config_key(engine.y, s),
            positions=engine.positions(s),
            mass=m,
        )
        for k, (s, m) in enumerate(sorted(layer.items()))
    )


def exact_distribution(
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
    corridor: Optional[HeightCorridor] = None,
) -> ExactDistribution:
    """Conditional marginals at each time and the mass of the endpoint (and corridor) event"""
    engine = TransferEngine(y, T, _drift(drift, T), mode, q, normalized=True, z=z, corridor=corridor)
    engine.forward()
    log_total, total = engine.total()
    marginals = tuple(_layer_states(engine, engine.marginals(t)) for t in range(T + 1)) if log_total > -math.inf else ()
    logger.info(
        f"Transfer: exact distribution - N={y.n} T={T} mode={mode} states={sum(engine.layer_sizes())} "
        f"log_mass={log_total:.6g}"
    )
    return ExactDistribution(
        horizon=T, n=y.n, mode=mode, exact=engine.exact, log_total=log_total, total=total,
        marginals=marginals, layer_sizes=engine.layer_sizes(),
    )


def free_forward(
    y: ParticleConfig,
    T: int,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
) -> ExactDistribution:
    """Unconditioned forward masses; in kernel mode every layer sums to 1"""
    engine = TransferEngine(y, T, _drift(drift, T), mode, q, normalized=True)
    layers = engine.forward()
    log_total, total = engine.total()
    return ExactDistribution(
        horizon=T, n=y.n, mode=mode, exact=engine.exact, log_total=log_total, total=total,
        marginals=tuple(_layer_states(engine, layer) for layer in layers),
        layer_sizes=engine.layer_sizes(),
    )


def ball_log_probability(
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    H_star: HeightField,
    eps: float,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
    n_scale: Optional[int] = None,
) -> float:
    """(1/N²) ln P(x(T) = z and ‖H − H*‖ ≤ eps at integer times)"""
    n_scale = n_scale or y.n
    theta = float(y.theta)
    corridor = None if eps >= theta else HeightCorridor(H_star, eps, n_scale, theta)
    engine = ArrayTransfer(y, T, _drift(drift, T), mode, q, z=z, corridor=corridor)
    log_total = engine.run()
    value = log_total / n_scale ** 2
    logger.info(f"Transfer: ball probability - N={y.n} T={T} eps={eps} value={value:.6g}")
    return value


class CornerFlipChain:
    """Metropolis chain on walks from y to z; a move delays or advances one jump of one particle"""

    def __init__(
        self,
        y: ParticleConfig,
        z: ParticleConfig,
        T: int,
        drift: Optional[DriftProfile] = None,
        mode: str = "plain",
        q: Optional[float] = None,
        rng: Optional[np.random.Generator] = None,
        debug: bool = False,
    ):
        if mode not in MODES:
            raise WalkError(f"unknown kernel mode {mode!r}")
        self.y, self.z, self.T = y, z, T
        self.drift = _drift(drift, T)
        self.mode = mode
        self.q = _check_q(q) if mode == "q" else None
        self.rng = rng or make_rng(0)
        self.debug = debug
        self.theta = float(y.theta)
        start = canonical_path(y, z, T)
        self.base = y.as_array()
        self.disp = np.rint(start.positions_array() - self.base).astype(np.int64)
        self.log_b = np.log(np.array([float(b) for b in self.drift.b])) if T else np.zeros(0)
        self.step_logs = np.array([self._step_log(t, self.disp) for t in range(T)])
        self.log_weight = math.fsum(self.step_logs)
        self.proposed = self.accepted = self.infeasible = 0
        self.sweeps = 0

    def _step_log(self, t: int, disp: np.ndarray) -> float:
        pos = self.base + disp[t]
        e = tuple(int(v) for v in disp[t + 1] - disp[t])
        if self.mode == "q":
            value = q_ratio_log(pos, self.theta, e, self.q)
        else:
            value = ratio_log(pos, self.theta, e)
        return value + sum(e) * self.log_b[t]

    def global_log_weight(self, disp: Optional[np.ndarray] = None) -> float:
        disp = self.disp if disp is None else disp
        return math.fsum(self._step_log(t, disp) for t in range(self.T))

    def _in_lattice(self, row: np.ndarray) -> bool:
        gaps = np.diff(-(self.base + row))
        return bool(np.all(gaps >= self.theta - settings.LATTICE_TOL))

    def propose(self, i: int, t: int) -> bool:
        """Flip the corner of particle i between steps t and t+1"""
        self.proposed += 1
        pair = (int(self.disp[t + 1, i] - self.disp[t, i]), int(self.disp[t + 2, i] - self.disp[t + 1, i]))
        if pair not in ((1, 0), (0, 1)):
            self.infeasible += 1
            return False
        shift = -1 if pair == (1, 0) else 1
        self.disp[t + 1, i] += shift
        if not self._in_lattice(self.disp[t + 1]):
            self.disp[t + 1, i] -= shift
            self.infeasible += 1
            return False
        new_t, new_t1 = self._step_log(t, self.disp), self._step_log(t + 1, self.disp)
        log_ratio = new_t + new_t1 - self.step_logs[t] - self.step_logs[t + 1]
        if self.debug:
            proposed = self.global_log_weight()
            global_ratio = proposed - self.log_weight
            if not math.isclose(log_ratio, global_ratio, rel_tol=1e-9, abs_tol=1e-9):
                raise ConsistencyError(f"local ratio {log_ratio} differs from global ratio {global_ratio}")
        if log_ratio >= 0 or math.log(self.rng.random()) < log_ratio:
            self.step_logs[t], self.step_logs[t + 1] = new_t, new_t1
            self.log_weight += log_ratio
            self.accepted += 1
            return True
        self.disp[t + 1, i] -= shift
        return False

    def sweep(self) -> None:
        sites = self.y.n * max(self.T - 1, 0)
        if sites:
            particles = self.rng.integers(0, self.y.n, size=sites)
            times = self.rng.integers(0, self.T - 1, size=sites)
            for i, t in zip(particles, times):
                self.propose(int(i), int(t))
        self.sweeps += 1
        if self.sweeps % settings.MCMC_VERIFY_EVERY == 0:
            self.verify()

    def verify(self) -> None:
        fresh = self.global_log_weight()
        if not math.isclose(fresh, self.log_weight, rel_tol=1e-9, abs_tol=1e-8):
            logger.error(f"ConsistencyError - MCMC log weight drift - tracked={self.log_weight} fresh={fresh}")
            raise ConsistencyError(f"tracked log weight {self.log_weight} drifted from {fresh}")
        self.log_weight = fresh

    def positions(self) -> np.ndarray:
        return self.base + self.disp

    def key(self) -> str:
        return "|".join("".join(str(int(v)) for v in row) for row in np.diff(self.disp, axis=0))

    def ensemble(self) -> WalkEnsemble:
        return _walk_from_states(self.y, [tuple(int(v) for v in row) for row in self.disp])

    def state(self, seed: int) -> McmcState:
        return McmcState(ensemble=self.ensemble(), log_weight=self.log_weight, rng_seed=seed, sweep_count=self.sweeps)


def sample_mcmc(
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    sweeps: int,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
    seed: int = 0,
    debug: bool = False,
) -> McmcState:
    """Chain state after ``sweeps`` sweeps from the canonical path"""
    chain = CornerFlipChain(y, z, T, drift, mode, q, make_rng(seed), debug)
    for _ in range(sweeps):
        chain.sweep()
    logger.debug(f"Sampler: mcmc done - sweeps={sweeps} accepted={chain.accepted} proposed={chain.proposed}")
    return chain.state(seed)


def run_chains(
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    sweeps: int,
    chains: int = 4,
    seed: int = 0,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
    burn_in: Optional[int] = None,
    threads: Optional[int] = None,
    grid: Optional[GridSpec] = None,
    n_scale: Optional[int] = None,
    count_paths: bool = True,
) -> List[ChainSummary]:
    """Independent chains on spawned Philox streams, one worker per chain up to ``threads``"""
    burn_in = settings.BURN_IN_FACTOR * y.n * T if burn_in is None else burn_in
    n_scale = n_scale or y.n
    streams = np.random.SeedSequence(seed).spawn(chains)

    def run(index: int) -> ChainSummary:
        chain = CornerFlipChain(y, z, T, drift, mode, q, make_rng(streams[index]))
        for _ in range(burn_in):
            chain.sweep()
        counts: Counter = Counter()
        height_sum = np.zeros((grid.nx, grid.nt)) if grid is not None else None
        for _ in range(sweeps):
            chain.sweep()
            if count_paths:
                counts[chain.key()] += 1
            if height_sum is not None:
                height_sum += height_grid(chain.positions(), chain.theta, n_scale, grid)
        return ChainSummary(
            chain=index,
            final=chain.state(seed),
            proposed=chain.proposed,
            accepted=chain.accepted,
            infeasible=chain.infeasible,
            recorded_sweeps=sweeps,
            path_counts=dict(counts),
            mean_height=None if height_sum is None else height_sum / max(sweeps, 1),
        )

    workers = min(threads or settings.MAX_THREADS, chains)
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        summaries = list(pool.map(run, range(chains)))
    logger.info(
        f"Sampler: chains finished - chains={chains} sweeps={sweeps} burn_in={burn_in} "
        f"acceptance={np.mean([s.acceptance_rate for s in summaries]):.3f}"
    )
    return summaries


def mcmc_path_frequencies(
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    sweeps: int,
    chains: int = 4,
    seed: int = 0,
    **kwargs,
) -> Dict[str, float]:
    """Pooled post-burn-in frequency of each path key"""
    summaries = run_chains(y, z, T, sweeps, chains, seed, **kwargs)
    pooled: Counter = Counter()
    for s in summaries:
        pooled.update(s.path_counts)
    total = sum(pooled.values())
    return {k: v / total for k, v in pooled.items()}


def mcmc_mean_height(
    y: ParticleConfig,
    z: ParticleConfig,
    T: int,
    sweeps: int,
    grid: GridSpec,
    chains: int = 4,
    seed: int = 0,
    n_scale: Optional[int] = None,
    **kwargs,
) -> HeightField:
    n_scale = n_scale or y.n
    summaries = run_chains(y, z, T, sweeps, chains, seed, grid=grid, n_scale=n_scale, count_paths=False, **kwargs)
    mean = np.mean([s.mean_height for s in summaries], axis=0)
    return HeightField(
        grid=mean, x_min=grid.x_min, dx=grid.dx, dt=grid.dt, theta=float(y.theta),
        t_horizon=T / n_scale, n_scale=n_scale,
    )


def forward_mean_height(
    y: ParticleConfig,
    T: int,
    grid: GridSpec,
    samples: int,
    seed: int = 0,
    drift: Optional[DriftProfile] = None,
    mode: str = "plain",
    q: Optional[float] = None,
    n_scale: Optional[int] = None,
) -> HeightField:
    """Monte Carlo mean height of free forward walks.

    Above the enumeration cap only a θ = 1 packed start is supported; those walks are
    drawn by row insertion.
    """
    schur = y.n > settings.ENUMERATION_CAP
    if schur and not _schur_start(y, mode):
        raise EnumerationCapError(
            f"N={y.n} is above the enumeration cap {settings.ENUMERATION_CAP} and the start is not a theta=1 packed block"
        )
    n_scale = n_scale or y.n
    drift = _drift(drift, T)
    q = _check_q(q) if mode == "q" else None
    rng = make_rng(seed)
    total = np.zeros((grid.nx, grid.nt))
    for _ in range(samples):
        if schur:
            positions = _schur_positions(y, T, drift, rng)
        else:
            positions = _forward_walk(y, T, drift, mode, q, rng).positions_array()
        total += height_grid(positions, float(y.theta), n_scale, grid)
    return HeightField(
        grid=total / samples, x_min=grid.x_min, dx=grid.dx, dt=grid.dt, theta=float(y.theta),
        t_horizon=T / n_scale, n_scale=n_scale,
    )
