"""Command-line front end.

    python cli.py jack --lam 1,1 --n 2 --theta 1 --b 1/2,1/3
    python cli.py verify-ldp --theta 1 --schedule 4,6,8 --out runs/ldp
    python cli.py loop-check --config loop.json --record

Exit codes: 0 pass, 2 verification failure, 1 usage or input error. Logs go
to standard error; reports go to standard output or to files under --out.
"""
import argparse
import asyncio
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from config import settings
from crud import run_crud
from database import SessionLocal, init_db
from models.lattice import BoundaryProfile, YoungDiagram
from models.run import (
    CONFIG_VERSION,
    ExactDistParams,
    JackParams,
    LimitShapeParams,
    LoopCheckParams,
    MacdonaldParams,
    RateParams,
    RunConfig,
    RunCreate,
    RunStatus,
    SampleParams,
    SurfaceParams,
    VerifyJackParams,
    VerifyLdpParams,
    VerifyMacdonaldParams,
)
from models.surface import Slope
from models.symfun import QParams
from models.weights import DriftFunction, DriftProfile
from utils.exact import as_scalar
from utils.io import (
    distribution_csv,
    dumps_report,
    ensemble_jsonl,
    height_csv,
    profile_csv,
    read_height_csv,
    run_metadata,
    to_jsonable,
    write_text,
)
from utils.logger import configure_logging
from walks.errors import WalkError
from walks.harness import compare_kappas, verify_jack, verify_ldp
from walks.lattice import diagram_to_config
from walks.loopcheck import run_loop_corpus
from walks.sampler import exact_distribution, path_key, run_chains, sample_forward
from walks.surface import complex_slope, sigma, sigma_grad
from walks.symfun import (
    jack_principal,
    macdonald_principal,
    schur_skew_jt,
    skew_jack_pathsum,
    skew_macdonald_pathsum,
)
from walks.variational import field_from_height, rate, solve_limit_shape, solver_grid, translating_ramp
from walks.weights import path_weight, q_from_kappa

logger = logging.getLogger("ThetaWalks")

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    """Bad command line"""


class CommandResult(BaseModel):
    """Report plus the data files a command wants written next to it."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    report: Any
    passed: bool = True
    verdict: str = "ok"
    files: Dict[str, str] = {}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()] if text else []


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()] if text else []


def _strings(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()] if text else []


def _profile(text: str) -> Dict[str, List[float]]:
    """'x0:h0,x1:h1,...'"""
    pairs = [p.split(":") for p in _strings(text)]
    return {"xs": [float(x) for x, _ in pairs], "h": [float(h) for _, h in pairs]}


def _drift_function(coefficients: Sequence[float]) -> Optional[DriftFunction]:
    return DriftFunction(coefficients=tuple(coefficients)) if coefficients else None


def _q_for(mode: str, kappa: Optional[float], n: int) -> Optional[float]:
    if mode != "q":
        return None
    if kappa is None:
        raise WalkError("mode q needs --kappa")
    return q_from_kappa(kappa, n)


# Commands
def cmd_sample(p: SampleParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    y = diagram_to_config(YoungDiagram(rows=p.start), p.n, p.theta)
    drift = DriftProfile.constant(p.b, p.T)
    q = _q_for(p.mode, p.kappa, p.n)
    meta = run_metadata(config.command, config.config_hash(), config.seed)
    if p.method == "forward":
        walk = sample_forward(y, p.T, drift, p.mode, q, config.seed)
        weight = path_weight(walk, drift, p.mode, q)
        report = {
            "method": "forward",
            "final": list(walk.steps[-1].positions),
            "path_key": path_key(walk),
            "log_weight": weight.log_value,
        }
        return CommandResult(report=report, files={"ensemble.jsonl": ensemble_jsonl([walk], meta)})
    if p.end is None:
        raise WalkError("mcmc sampling needs --end")
    z = diagram_to_config(YoungDiagram(rows=p.end), p.n, p.theta)
    summaries = run_chains(y, z, p.T, p.sweeps, seed=config.seed, drift=drift, mode=p.mode, q=q, threads=threads)
    walks = [s.final.ensemble for s in summaries]
    report = {
        "method": "mcmc",
        "chains": [
            {"chain": s.chain, "acceptance_rate": s.acceptance_rate, "final_path": path_key(s.final.ensemble)}
            for s in summaries
        ],
        "path_counts": dict(sum((Counter(s.path_counts) for s in summaries), Counter())),
    }
    return CommandResult(report=report, files={"ensemble.jsonl": ensemble_jsonl(walks, meta)})


def cmd_exact_dist(p: ExactDistParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    y = diagram_to_config(YoungDiagram(rows=p.start), p.n, p.theta)
    z = diagram_to_config(YoungDiagram(rows=p.end), p.n, p.theta)
    q = _q_for(p.mode, p.kappa, p.n)
    dist = exact_distribution(y, z, p.T, DriftProfile.constant(p.b, p.T), p.mode, q)
    meta = run_metadata(config.command, config.config_hash(), config.seed)
    report = {
        "log_total": dist.log_total,
        "total": dist.total,
        "exact": dist.exact,
        "layer_sizes": dist.layer_sizes,
    }
    return CommandResult(report=report, files={"distribution.csv": distribution_csv(dist, meta)})


def cmd_verify_ldp(p: VerifyLdpParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    report = verify_ldp(p.theta, p.schedule, p.eps, p.horizon, p.speed, p.grid_steps)
    return CommandResult(report=report, passed=report.passed, verdict=_trend_verdict(report.gaps, report.passed))


def cmd_verify_jack(p: VerifyJackParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    report = verify_jack(p.theta, p.schedule, _drift_function(p.drift), p.grid_steps)
    return CommandResult(report=report, passed=report.passed, verdict=_trend_verdict(report.gaps, report.passed))


def cmd_verify_macdonald(p: VerifyMacdonaldParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    report = compare_kappas(p.theta, p.kappas, p.schedule, _drift_function(p.drift), p.grid_steps)
    verdict = "kappa trends converge" if report.passed else "kappa trends do not converge monotonically"
    return CommandResult(report=report, passed=report.passed, verdict=verdict)


def _trend_verdict(gaps: Sequence[float], passed: bool) -> str:
    shown = ", ".join(f"{g:.4g}" for g in gaps)
    return f"gaps strictly decreasing: {shown}" if passed else f"gaps not strictly decreasing: {shown}"


def _boundary(profile, theta: Optional[float]) -> BoundaryProfile:
    h = np.asarray(profile.h, dtype=float)
    return BoundaryProfile(xs=np.asarray(profile.xs, dtype=float), h=h, theta=theta or float(h[-1] - h[0]))


def cmd_limit_shape(p: LimitShapeParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    h0, hT = _boundary(p.h0, p.theta), _boundary(p.hT, p.theta)
    grid = solver_grid(h0, hT, p.T, p.grid_steps)
    F, report = solve_limit_shape(h0, hT, p.T, p.theta, _drift_function(p.drift), grid, start=p.start)
    meta = run_metadata(config.command, config.config_hash(), config.seed)
    files = {
        "field.csv": height_csv(F.to_height_field(), meta),
        "h0.csv": profile_csv(h0, meta),
        "hT.csv": profile_csv(hT, meta),
    }
    return CommandResult(report=report, passed=report.converged, verdict="converged" if report.converged else "iteration cap reached", files=files)


def cmd_rate(p: RateParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    f = _drift_function(p.drift)
    if p.field_csv:
        F = field_from_height(read_height_csv(p.field_csv, p.theta))
    else:
        ell = p.theta / p.rho
        steps = p.grid_steps or settings.GRID_STEPS
        h0 = BoundaryProfile(xs=np.array([-1.0, 0.0, ell, ell + 1.0]), h=np.array([0.0, 0.0, p.theta, p.theta]), theta=p.theta)
        hT = BoundaryProfile(xs=h0.xs + p.speed * p.T, h=h0.h, theta=p.theta)
        F = translating_ramp(p.rho, p.speed, ell, p.T, p.theta, solver_grid(h0, hT, p.T, steps))
    return CommandResult(report=rate(F, f))


def cmd_jack(p: JackParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    lam, mu = YoungDiagram(rows=p.lam), YoungDiagram(rows=p.mu)
    out: Dict[str, Any] = {"principal": jack_principal(lam, p.n, p.theta)}
    if p.b:
        b = DriftProfile(b=tuple(as_scalar(v) for v in p.b))
        out["skew"] = skew_jack_pathsum(lam, mu, b, p.n, p.theta)
        if as_scalar(p.theta) == 1:
            out["schur"] = schur_skew_jt(lam.transpose(), mu.transpose(), list(b.b))
    return CommandResult(report=out)


def cmd_macdonald(p: MacdonaldParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    qp = QParams(q=p.q, theta=p.theta) if p.q is not None else QParams.from_kappa(p.kappa, p.n, p.theta)
    lam, mu = YoungDiagram(rows=p.lam), YoungDiagram(rows=p.mu)
    out: Dict[str, Any] = {"q": qp.q, "t": qp.t, "principal": macdonald_principal(lam, p.n, qp)}
    if p.b:
        out["skew"] = skew_macdonald_pathsum(lam, mu, DriftProfile(b=tuple(p.b)), p.n, qp)
    return CommandResult(report=out)


def cmd_surface(p: SurfaceParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    rows = []
    for s, t in p.slopes:
        sl = Slope(s=s, t=t)
        row = {"s": s, "t": t, "sigma": sigma(sl)}
        if p.gradient:
            row["grad"] = sigma_grad(sl)
            row["complex_slope"] = complex_slope(sl).f
        rows.append(row)
    return CommandResult(report={"values": rows})


def cmd_loop_check(p: LoopCheckParams, config: RunConfig, threads: Optional[int]) -> CommandResult:
    report = run_loop_corpus(p.count, config.seed, tuple(p.maps), p.n_max, threads, p.tolerance)
    verdict = f"max residue {report.max_residue:.3e}, max deformation gap {report.max_deformation_gap:.3e}"
    return CommandResult(report=report, passed=report.passed, verdict=verdict)


COMMAND_HANDLERS: Dict[str, Callable[[Any, RunConfig, Optional[int]], CommandResult]] = {
    "sample": cmd_sample,
    "exact-dist": cmd_exact_dist,
    "verify-ldp": cmd_verify_ldp,
    "verify-jack": cmd_verify_jack,
    "verify-macdonald": cmd_verify_macdonald,
    "limit-shape": cmd_limit_shape,
    "rate": cmd_rate,
    "jack": cmd_jack,
    "macdonald": cmd_macdonald,
    "surface-tension": cmd_surface,
    "loop-check": cmd_loop_check,
}


def execute(config: RunConfig, threads: Optional[int] = None) -> CommandResult:
    """Run one validated configuration"""
    handler = COMMAND_HANDLERS[config.command]
    logger.info(f"CLI: command started - command={config.command} hash={config.config_hash()[:12]} seed={config.seed}")
    result = handler(config.typed_params(), config, threads)
    logger.info(f"CLI: command finished - command={config.command} passed={result.passed}")
    return result


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON run configuration; replaces the command flags")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--format", choices=["json", "csv", "jsonl"], default="json")
    sub.add_argument("--threads", type=int, default=None, help="worker cap")
    sub.add_argument("--record", action="store_true", help="store the run in the registry")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="theta-walks", description=settings.PROJECT_NAME)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name in ("sample", "exact-dist"):
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.add_argument("--n", type=int)
        sub.add_argument("--theta", default="1")
        sub.add_argument("--T", type=int)
        sub.add_argument("--start", type=_ints, default=[])
        sub.add_argument("--end", type=_ints, default=None)
        sub.add_argument("--b", default="1")
        sub.add_argument("--mode", choices=["plain", "q"], default="plain")
        sub.add_argument("--kappa", type=float)
        if name == "sample":
            sub.add_argument("--method", choices=["forward", "mcmc"], default="forward")
            sub.add_argument("--sweeps", type=int, default=1000)

    sub = subs.add_parser("verify-ldp")
    _add_common(sub)
    sub.add_argument("--theta", default="1")
    sub.add_argument("--schedule", type=_ints, default=[4, 6, 8])
    sub.add_argument("--eps", type=float, default=0.25)
    sub.add_argument("--horizon", type=float, default=2.0)
    sub.add_argument("--speed", type=float, default=0.5)
    sub.add_argument("--grid-steps", type=int)

    for name in ("verify-jack", "verify-macdonald"):
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.add_argument("--theta", default="1")
        sub.add_argument("--schedule", type=_ints, default=[4, 6, 8])
        sub.add_argument("--drift", type=_floats, default=[], help="coefficients of f(s) = Σ c_k s^k")
        sub.add_argument("--grid-steps", type=int)
        if name == "verify-macdonald":
            sub.add_argument("--kappas", type=_floats, default=[-0.5, -2.0])

    sub = subs.add_parser("limit-shape")
    _add_common(sub)
    sub.add_argument("--h0", type=_profile, help="x:h pairs, e.g. -1:0,0:0,1:1,2:1")
    sub.add_argument("--hT", type=_profile)
    sub.add_argument("--T", type=float)
    sub.add_argument("--theta", type=float)
    sub.add_argument("--drift", type=_floats, default=[])
    sub.add_argument("--grid-steps", type=int)
    sub.add_argument("--start", choices=["mid", "upper", "lower"], default="mid")

    sub = subs.add_parser("rate")
    _add_common(sub)
    sub.add_argument("--theta", type=float, default=1.0)
    sub.add_argument("--T", type=float, default=1.0)
    sub.add_argument("--rho", type=float, default=0.5)
    sub.add_argument("--speed", type=float, default=0.5)
    sub.add_argument("--field-csv")
    sub.add_argument("--drift", type=_floats, default=[])
    sub.add_argument("--grid-steps", type=int)

    sub = subs.add_parser("jack")
    _add_common(sub)
    sub.add_argument("--lam", type=_ints, default=[])
    sub.add_argument("--mu", type=_ints, default=[])
    sub.add_argument("--n", type=int)
    sub.add_argument("--theta", default="1")
    sub.add_argument("--b", type=_strings, default=[])

    sub = subs.add_parser("macdonald")
    _add_common(sub)
    sub.add_argument("--lam", type=_ints, default=[])
    sub.add_argument("--mu", type=_ints, default=[])
    sub.add_argument("--n", type=int)
    sub.add_argument("--theta", type=float, default=1.0)
    sub.add_argument("--q", type=float)
    sub.add_argument("--kappa", type=float)
    sub.add_argument("--b", type=_floats, default=[])

    sub = subs.add_parser("surface-tension")
    _add_common(sub)
    sub.add_argument("--s", type=_floats, default=[])
    sub.add_argument("--t", type=_floats, default=[])
    sub.add_argument("--grad", action="store_true")

    sub = subs.add_parser("loop-check")
    _add_common(sub)
    sub.add_argument("--count", type=int, default=50)
    sub.add_argument("--n-max", type=int, default=6)
    sub.add_argument("--maps", type=_strings, default=["identity", "q"])
    sub.add_argument("--tolerance", type=float, default=1e-9)
    return parser


_COMMON = {"command", "config", "seed", "out", "format", "threads", "record"}


def _params_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    raw = {k: v for k, v in vars(args).items() if k not in _COMMON and v is not None}
    if args.command == "surface-tension":
        if len(raw.get("s", [])) != len(raw.get("t", [])):
            raise UsageError("--s and --t need the same number of values")
        return {"slopes": list(zip(raw.get("s", []), raw.get("t", []))), "gradient": raw.get("grad", False)}
    return raw


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        config = RunConfig.model_validate(data)
        if config.command != args.command:
            raise UsageError(f"config is for {config.command!r} but the command line asks for {args.command!r}")
        return config
    return RunConfig(
        version=CONFIG_VERSION,
        command=args.command,
        seed=args.seed,
        output_dir=args.out,
        format=args.format,
        params=_params_from_args(args),
    )


def emit(config: RunConfig, result: CommandResult) -> Dict[str, str]:
    """Write the report and data files; stdout when no output directory is set"""
    meta = run_metadata(config.command, config.config_hash(), config.seed)
    text = dumps_report({"passed": result.passed, "verdict": result.verdict, "result": result.report}, meta)
    if config.output_dir is None:
        data = [body for name, body in result.files.items() if name.endswith("." + config.format)]
        sys.stdout.write(data[0] if config.format != "json" and data else text)
        return {}
    out = Path(config.output_dir)
    hashes = {"report.json": write_text(out / "report.json", text)}
    write_text(out / "config.json", config.canonical_json() + "\n")
    for name, body in result.files.items():
        hashes[name] = write_text(out / name, body)
    return hashes


def record(config: RunConfig, result: Optional[CommandResult], error: Optional[str] = None) -> int:
    init_db()
    if result is None:
        status, verdict, report = RunStatus.ERROR, error, {}
    else:
        status = RunStatus.PASSED if result.passed else RunStatus.FAILED
        verdict, report = result.verdict, to_jsonable(result.report)
    db = SessionLocal()
    try:
        run = asyncio.run(run_crud.create_run(db, RunCreate(
            command=config.command, config_hash=config.config_hash(), seed=config.seed,
            status=status, verdict=verdict, report=report,
        )))
        return run.id
    finally:
        db.close()


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
        config = config_from_args(args)
    except (UsageError, ValidationError, json.JSONDecodeError, OSError) as exc:
        logger.error(f"ValidationError - bad invocation - {exc}")
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    try:
        result = execute(config, args.threads)
    except (WalkError, ValueError) as exc:
        logger.error(f"LogicError - command failed - command={config.command} - {exc}")
        sys.stderr.write(f"error: {exc}\n")
        if args.record:
            record(config, None, str(exc))
        return EXIT_ERROR
    emit(config, result)
    if args.record:
        run_id = record(config, result)
        logger.info(f"CLI: run recorded - id={run_id}")
    return EXIT_PASS if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
