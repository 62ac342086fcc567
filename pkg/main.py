from fastapi import FastAPI, HTTPException, Depends, status, Request
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel
from typing import List, Optional
import uvicorn
from datetime import datetime

from cli import execute
from config import settings
from models.run import (
    CONFIG_VERSION,
    CommandResponse,
    DiagramRequest,
    ExactDistParams,
    JackParams,
    KernelRequest,
    LimitShapeParams,
    LoopCheckParams,
    MacdonaldParams,
    RateParams,
    RunConfig,
    RunCreate,
    RunResponse,
    RunStats,
    RunStatus,
    SampleParams,
    SurfaceParams,
)
from models.lattice import YoungDiagram
from database import get_db, init_db
from crud import run_crud
from utils.io import to_jsonable
from utils.logger import configure_logging
from walks.errors import WalkError
from walks.lattice import diagram_to_config
from walks.weights import q_from_kappa, step_distribution

# Create database tables
init_db()

app = FastAPI(
    title=settings.PROJECT_NAME,
    description="Exact sampling, variational limit shapes and symmetric-function checks for θ-Bernoulli walk ensembles",
    version=settings.VERSION,
)

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.BACKEND_CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

logger = configure_logging()

@app.middleware("http")
async def log_requests(request: Request, call_next):
	start = datetime.utcnow()
	try:
		response = await call_next(request)
		elapsed_ms = int((datetime.utcnow() - start).total_seconds() * 1000)
		logger.info(
			f"HTTPRequest - {request.method} {request.url.path} - {response.status_code} - {elapsed_ms}ms"
		)
		return response
	except Exception as exc:
		elapsed_ms = int((datetime.utcnow() - start).total_seconds() * 1000)
		logger.exception(
			f"APIError - Unhandled exception - {request.method} {request.url.path} - {elapsed_ms}ms"
		)
		raise


async def _run(command: str, params: BaseModel, seed: int, record: bool, db) -> CommandResponse:
    """Validate, execute and optionally record one command"""
    try:
        config = RunConfig(
            version=CONFIG_VERSION, command=command, seed=seed,
            params=params.model_dump(mode="json", exclude_none=True),
        )
        result = execute(config)
    except WalkError as e:
        logger.error(f"LogicError - {command} failed - error={e}")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    except ValueError as e:
        logger.error(f"ValidationError - {command} rejected - error={e}")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    report = to_jsonable(result.report)
    if not isinstance(report, dict):
        report = {"value": report}
    run_id = None
    if record:
        run = await run_crud.create_run(db=db, run=RunCreate(
            command=command, config_hash=config.config_hash(), seed=seed,
            status=RunStatus.PASSED if result.passed else RunStatus.FAILED,
            verdict=result.verdict, report=report,
        ))
        run_id = run.id
    return CommandResponse(
        command=command, config_hash=config.config_hash(), passed=result.passed,
        verdict=result.verdict, report=report, run_id=run_id,
    )


@app.get("/", response_model=dict)
async def root():
    """Root endpoint - returns API information"""
    payload = {
        "message": f"Welcome to {settings.PROJECT_NAME}",
        "version": settings.VERSION,
        "status": "running",
        "endpoints": {
            "lattice": "/lattice/diagram-to-config",
            "weights": "/weights/kernel",
            "sample": "/sample",
            "exact_dist": "/exact-dist",
            "surface_tension": "/surface-tension",
            "limit_shape": "/limit-shape",
            "rate": "/rate",
            "jack": "/jack",
            "macdonald": "/macdonald",
            "loop_check": "/loop-check",
            "runs": "/runs",
            "docs": "/docs",
        },
    }
    logger.info("Root endpoint accessed")
    return payload

# Health check endpoint
@app.get("/health", status_code=status.HTTP_200_OK)
async def health_check():
    """Health check endpoint - Returns 200 if healthy"""
    payload = {"status": "healthy", "timestamp": datetime.utcnow().isoformat()}
    logger.info("Health check OK")
    return payload

# Lattice and kernel endpoints
@app.post("/lattice/diagram-to-config", status_code=status.HTTP_200_OK)
async def lattice_diagram_to_config(body: DiagramRequest):
    """Particle positions x_i = λ_i − (i−1)θ - Returns 400 on bad input"""
    try:
        x = diagram_to_config(YoungDiagram(rows=tuple(body.rows)), body.n, body.theta)
    except (WalkError, ValueError) as e:
        logger.error(f"ValidationError - bad diagram - rows={body.rows} n={body.n} - error={e}")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    return {"positions": to_jsonable(list(x.positions)), "theta": to_jsonable(x.theta)}

@app.post("/weights/kernel", status_code=status.HTTP_200_OK)
async def weights_kernel(body: KernelRequest):
    """Law of one step from the configuration of a diagram"""
    try:
        x = diagram_to_config(YoungDiagram(rows=tuple(body.rows)), body.n, body.theta)
        q = None
        if body.mode == "q":
            if body.kappa is None:
                raise WalkError("mode q needs kappa")
            q = q_from_kappa(body.kappa, body.n)
        law = step_distribution(x, body.b, body.mode, q)
    except (WalkError, ValueError) as e:
        logger.error(f"LogicError - kernel failed - rows={body.rows} n={body.n} mode={body.mode} - error={e}")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    return {"steps": [{"e": list(e), "probability": to_jsonable(p)} for e, p in law]}

# Command endpoints
@app.post("/sample", response_model=CommandResponse)
async def sample(body: SampleParams, seed: int = 0, record: bool = False, db=Depends(get_db)):
    return await _run("sample", body, seed, record, db)

@app.post("/exact-dist", response_model=CommandResponse)
async def exact_dist(body: ExactDistParams, seed: int = 0, record: bool = False, db=Depends(get_db)):
    return await _run("exact-dist", body, seed, record, db)

@app.post("/surface-tension", response_model=CommandResponse)
async def surface_tension(body: SurfaceParams, record: bool = False, db=Depends(get_db)):
    return await _run("surface-tension", body, 0, record, db)

@app.post("/limit-shape", response_model=CommandResponse)
async def limit_shape(body: LimitShapeParams, record: bool = False, db=Depends(get_db)):
    return await _run("limit-shape", body, 0, record, db)

@app.post("/rate", response_model=CommandResponse)
async def rate(body: RateParams, record: bool = False, db=Depends(get_db)):
    if body.field_csv is not None:
        logger.error("ValidationError - rate from a server-side file is not allowed over HTTP")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="field_csv is a CLI-only option")
    return await _run("rate", body, 0, record, db)

@app.post("/jack", response_model=CommandResponse)
async def jack(body: JackParams, record: bool = False, db=Depends(get_db)):
    return await _run("jack", body, 0, record, db)

@app.post("/macdonald", response_model=CommandResponse)
async def macdonald(body: MacdonaldParams, record: bool = False, db=Depends(get_db)):
    return await _run("macdonald", body, 0, record, db)

@app.post("/loop-check", response_model=CommandResponse)
async def loop_check(body: LoopCheckParams, seed: int = 0, record: bool = False, db=Depends(get_db)):
    return await _run("loop-check", body, seed, record, db)

# Run registry endpoints
@app.get("/runs", response_model=List[RunResponse], status_code=status.HTTP_200_OK)
async def get_runs(
    skip: int = 0,
    limit: int = 100,
    command: Optional[str] = None,
    status_filter: Optional[str] = None,
    db=Depends(get_db),
):
    """Recorded runs, newest first - Returns 200 on success"""
    return await run_crud.get_runs(db=db, skip=skip, limit=limit, command=command, status_filter=status_filter)

@app.get("/runs/{run_id}", response_model=RunResponse, status_code=status.HTTP_200_OK)
async def get_run(run_id: int, db=Depends(get_db)):
    """Get run by ID - Returns 200 on success, 404 if not found"""
    run = await run_crud.get_run(db=db, run_id=run_id)
    if not run:
        logger.error(f"LogicError - Run not found - id={run_id}")
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail=f"Run with ID {run_id} not found"
        )
    return run

# Statistics endpoints
@app.get("/stats/runs", response_model=RunStats, status_code=status.HTTP_200_OK)
async def get_run_stats(db=Depends(get_db)):
    """Run counts by command and status - Returns 200 on success"""
    stats = await run_crud.get_run_stats(db=db)
    logger.info("Stats requested - runs")
    return stats

if __name__ == "__main__":
    uvicorn.run(app, host=settings.HOST, port=settings.PORT)
