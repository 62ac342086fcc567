"""Output files: JSON reports, CSV tables and JSONL ensembles, each with a metadata header.

Headers carry no timestamps, so two runs of one configuration write
byte-identical files.
"""
import csv
import hashlib
import io
import json
import platform
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import scipy
from pydantic import BaseModel

from config import settings
from models.lattice import BoundaryProfile, HeightField, WalkEnsemble
from models.sampler import ExactDistribution
from utils.exact import format_scalar

PathLike = Union[str, Path]


def run_metadata(command: str, config_hash: str = "", seed: int = 0) -> Dict[str, Any]:
    return {
        "command": command,
        "config_hash": config_hash,
        "seed": seed,
        "rng": settings.RNG_ALGORITHM,
        "version": settings.VERSION,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def to_jsonable(obj: Any) -> Any:
    """Pydantic models, numpy values and Fractions to plain JSON types"""
    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump())
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def dumps_report(report: Any, metadata: Dict[str, Any]) -> str:
    return json.dumps({"metadata": metadata, "report": to_jsonable(report)}, indent=2, sort_keys=True) + "\n"


def _header(metadata: Dict[str, Any]) -> str:
    return "".join(f"# {k}={metadata[k]}\n" for k in sorted(metadata))


def _float(value: float) -> str:
    return format(float(value), ".17g")


def height_csv(H: HeightField, metadata: Dict[str, Any]) -> str:
    out = io.StringIO()
    out.write(_header(metadata))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "t", "H"])
    for j, t in enumerate(H.ts):
        for i, x in enumerate(H.xs):
            writer.writerow([_float(x), _float(t), _float(H.grid[i, j])])
    return out.getvalue()


def profile_csv(h: BoundaryProfile, metadata: Dict[str, Any]) -> str:
    out = io.StringIO()
    out.write(_header(metadata))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "h"])
    for x, v in zip(h.xs, h.h):
        writer.writerow([_float(x), _float(v)])
    return out.getvalue()


def distribution_csv(dist: ExactDistribution, metadata: Dict[str, Any]) -> str:
    out = io.StringIO()
    out.write(_header(metadata))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", "config_key", "mass"])
    for t, layer in enumerate(dist.marginals):
        for state in layer:
            writer.writerow([t, state.config_key, format_scalar(state.mass)])
    return out.getvalue()


def ensemble_jsonl(walks: Iterable[WalkEnsemble], metadata: Dict[str, Any]) -> str:
    lines = [json.dumps({"metadata": metadata}, sort_keys=True)]
    for k, walk in enumerate(walks):
        for t, x in enumerate(walk.steps):
            lines.append(json.dumps({"sample": k, "t": t, "positions": to_jsonable(list(x.positions))}))
    return "\n".join(lines) + "\n"


def read_height_csv(path: PathLike, theta: float, n_scale: int = 1) -> HeightField:
    """Inverse of height_csv; comment lines are skipped"""
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise ValueError(f"{path} has no data rows")
    xs = np.unique([float(r["x"]) for r in rows])
    ts = np.unique([float(r["t"]) for r in rows])
    grid = np.empty((xs.size, ts.size))
    x_index = {x: i for i, x in enumerate(xs)}
    t_index = {t: j for j, t in enumerate(ts)}
    for r in rows:
        grid[x_index[float(r["x"])], t_index[float(r["t"])]] = float(r["H"])
    return HeightField(
        grid=grid, x_min=float(xs[0]), dx=float(xs[1] - xs[0]), dt=float(ts[1] - ts[0]) if ts.size > 1 else 1.0,
        theta=theta, t_horizon=float(ts[-1]), n_scale=n_scale,
    )


def write_text(path: Optional[PathLike], text: str) -> Optional[str]:
    """Write to path (creating parents) and return its sha256, or None when path is None"""
    if path is None:
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def file_hashes(paths: Sequence[PathLike]) -> List[str]:
    return [hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in paths]
