from sqlalchemy.orm import Session
from sqlalchemy import func
from typing import List, Optional
import json
import logging

from models.run import RunCreate, RunRecord, RunStats

logger = logging.getLogger("ThetaWalks")


async def create_run(db: Session, run: RunCreate) -> RunRecord:
    """Record one command run"""
    db_run = RunRecord(
        command=run.command,
        config_hash=run.config_hash,
        seed=run.seed,
        status=run.status.value,
        verdict=run.verdict,
        report=json.dumps(run.report, sort_keys=True),
    )
    db.add(db_run)
    db.commit()
    db.refresh(db_run)
    logger.info(f"DB: run recorded - id={db_run.id} command={db_run.command} status={db_run.status}")
    return db_run


async def get_run(db: Session, run_id: int) -> Optional[RunRecord]:
    """Get run by ID"""
    r = db.query(RunRecord).filter(RunRecord.id == run_id).first()
    logger.debug(f"DB: run fetch - id={run_id} found={bool(r)}")
    return r


async def get_runs(
    db: Session,
    skip: int = 0,
    limit: int = 100,
    command: Optional[str] = None,
    status_filter: Optional[str] = None,
) -> List[RunRecord]:
    """Recorded runs, newest first, with optional filters"""
    query = db.query(RunRecord)
    if command:
        query = query.filter(RunRecord.command == command)
    if status_filter:
        query = query.filter(RunRecord.status == status_filter)
    items = query.order_by(RunRecord.id.desc()).offset(skip).limit(limit).all()
    logger.debug(f"DB: runs fetched - count={len(items)} skip={skip} limit={limit}")
    return items


async def get_runs_by_hash(db: Session, config_hash: str) -> List[RunRecord]:
    """Every replay of one configuration"""
    return db.query(RunRecord).filter(RunRecord.config_hash == config_hash).order_by(RunRecord.id).all()


async def get_run_stats(db: Session) -> RunStats:
    """Run counts by command and by status"""
    total = db.query(RunRecord).count()
    by_command = db.query(RunRecord.command, func.count(RunRecord.id)).group_by(RunRecord.command).all()
    by_status = db.query(RunRecord.status, func.count(RunRecord.id)).group_by(RunRecord.status).all()
    return RunStats(
        total_runs=total,
        by_command={c: n for c, n in by_command},
        by_status={s: n for s, n in by_status},
    )
