import pytest
from sqlalchemy.orm import sessionmaker

from crud import run_crud
from database import init_db, make_engine
from models.base import Base
from models.run import RunCreate, RunStatus


@pytest.fixture
def db():
    engine = make_engine("sqlite:///:memory:")
    init_db(bind=engine)
    session = sessionmaker(autocommit=False, autoflush=False, bind=engine)()
    try:
        yield session
    finally:
        session.close()
        Base.metadata.drop_all(bind=engine)


def run(command="jack", config_hash="h1", status=RunStatus.PASSED):
    return RunCreate(command=command, config_hash=config_hash, seed=3, status=status, verdict="ok", report={"a": 1})


class TestRunCrud:
    @pytest.mark.asyncio
    async def test_create_and_get(self, db):
        """Test a recorded run is stored with its JSON report"""
        created = await run_crud.create_run(db, run())
        fetched = await run_crud.get_run(db, created.id)
        assert fetched.command == "jack"
        assert fetched.status == "passed"
        assert fetched.report == '{"a": 1}'

    @pytest.mark.asyncio
    async def test_get_missing(self, db):
        """Test an unknown id gives None"""
        assert await run_crud.get_run(db, 999) is None

    @pytest.mark.asyncio
    async def test_filters_and_order(self, db):
        """Test runs come newest first and filter by command and status"""
        await run_crud.create_run(db, run("jack"))
        await run_crud.create_run(db, run("rate", status=RunStatus.FAILED))
        await run_crud.create_run(db, run("jack", status=RunStatus.ERROR))
        everything = await run_crud.get_runs(db)
        assert [r.command for r in everything] == ["jack", "rate", "jack"]
        assert everything[0].id > everything[-1].id
        assert len(await run_crud.get_runs(db, command="jack")) == 2
        assert len(await run_crud.get_runs(db, status_filter="failed")) == 1
        assert len(await run_crud.get_runs(db, skip=1, limit=1)) == 1

    @pytest.mark.asyncio
    async def test_replays_by_hash(self, db):
        """Test runs of one configuration are grouped by hash"""
        await run_crud.create_run(db, run(config_hash="same"))
        await run_crud.create_run(db, run(config_hash="other"))
        await run_crud.create_run(db, run(config_hash="same"))
        assert len(await run_crud.get_runs_by_hash(db, "same")) == 2

    @pytest.mark.asyncio
    async def test_stats(self, db):
        """Test counts by command and status"""
        await run_crud.create_run(db, run("jack"))
        await run_crud.create_run(db, run("jack", status=RunStatus.FAILED))
        await run_crud.create_run(db, run("loop-check"))
        stats = await run_crud.get_run_stats(db)
        assert stats.total_runs == 3
        assert stats.by_command == {"jack": 2, "loop-check": 1}
        assert stats.by_status == {"passed": 2, "failed": 1}
