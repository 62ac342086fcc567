import pytest
from fastapi.testclient import TestClient
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from main import app
from database import get_db, init_db
from models.base import Base

# Create test database
SQLALCHEMY_DATABASE_URL = "sqlite:///:memory:"

engine = create_engine(
    SQLALCHEMY_DATABASE_URL,
    connect_args={"check_same_thread": False},
    poolclass=StaticPool,
)
TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

# Create tables
init_db(bind=engine)

def override_get_db():
    try:
        db = TestingSessionLocal()
        yield db
    finally:
        db.close()

app.dependency_overrides[get_db] = override_get_db

client = TestClient(app)

@pytest.fixture
def test_db():
    init_db(bind=engine)
    yield
    Base.metadata.drop_all(bind=engine)

class TestHealthCheck:
    def test_health_check(self):
        """Test health check endpoint returns 200"""
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

class TestRootEndpoint:
    def test_root_endpoint(self):
        """Test root endpoint returns 200 with API info"""
        response = client.get("/")
        assert response.status_code == 200
        data = response.json()
        assert "message" in data
        assert "version" in data
        assert "rate" in data["endpoints"]

class TestLatticeEndpoints:
    def test_diagram_to_config(self):
        """Test x_i = λ_i − (i−1)θ for λ = (2,1), θ = 1/2"""
        response = client.post("/lattice/diagram-to-config", json={"rows": [2, 1], "n": 3, "theta": "1/2"})
        assert response.status_code == 200
        assert response.json()["positions"] == ["2", "1/2", "-1"]

    def test_too_many_rows(self):
        """Test a diagram longer than N returns 400"""
        response = client.post("/lattice/diagram-to-config", json={"rows": [1, 1, 1], "n": 2})
        assert response.status_code == 400

    def test_missing_n(self):
        """Test a request without N returns 422"""
        response = client.post("/lattice/diagram-to-config", json={"rows": [1]})
        assert response.status_code == 422

class TestKernelEndpoint:
    def test_single_particle(self):
        """Test the one-particle law is b/(1+b) for a jump"""
        response = client.post("/weights/kernel", json={"n": 1, "b": "2"})
        assert response.status_code == 200
        steps = {tuple(s["e"]): s["probability"] for s in response.json()["steps"]}
        assert steps == {(0,): "1/3", (1,): "2/3"}

    def test_q_mode_needs_kappa(self):
        """Test mode q without kappa returns 400"""
        response = client.post("/weights/kernel", json={"n": 2, "mode": "q"})
        assert response.status_code == 400

class TestCommandEndpoints:
    def test_jack(self, test_db):
        """Test the Jack command returns its report"""
        response = client.post("/jack", json={"lam": [2, 1], "n": 3, "theta": "1"})
        assert response.status_code == 200
        data = response.json()
        assert data["passed"] is True
        assert data["report"]["principal"]["exact"] == "8"
        assert data["run_id"] is None

    def test_surface_tension(self, test_db):
        """Test σ at the Catalan point"""
        response = client.post("/surface-tension", json={"slopes": [[0.5, -0.25]]})
        assert response.status_code == 200
        assert response.json()["report"]["values"][0]["sigma"] == pytest.approx(0.2915609040308188)

    def test_exact_dist_infeasible(self, test_db):
        """Test unreachable endpoints return 400"""
        response = client.post("/exact-dist", json={"n": 2, "T": 1, "end": [3]})
        assert response.status_code == 400

    def test_rate_rejects_file(self, test_db):
        """Test reading a server-side height file is refused"""
        response = client.post("/rate", json={"field_csv": "/etc/passwd"})
        assert response.status_code == 400

    def test_macdonald_needs_one_parameter(self, test_db):
        """Test giving both q and kappa returns 422"""
        response = client.post("/macdonald", json={"lam": [1], "n": 2, "q": 0.5, "kappa": -1.0})
        assert response.status_code == 422

class TestRunEndpoints:
    def test_recorded_run(self, test_db):
        """Test record=true stores the run and it can be fetched"""
        response = client.post("/jack?record=true", json={"lam": [1], "n": 2})
        assert response.status_code == 200
        run_id = response.json()["run_id"]
        assert run_id is not None

        response = client.get(f"/runs/{run_id}")
        assert response.status_code == 200
        data = response.json()
        assert data["command"] == "jack"
        assert data["status"] == "passed"
        assert data["report"]["principal"]["exact"] == "2"

    def test_get_runs_filtered(self, test_db):
        """Test listing runs by command"""
        client.post("/jack?record=true", json={"lam": [1], "n": 2})
        client.post("/surface-tension?record=true", json={"slopes": [[0.5, -0.25]]})
        response = client.get("/runs", params={"command": "surface-tension"})
        assert response.status_code == 200
        assert [r["command"] for r in response.json()] == ["surface-tension"]

    def test_get_run_not_found(self, test_db):
        """Test getting non-existent run returns 404"""
        response = client.get("/runs/99999")
        assert response.status_code == 404

    def test_run_stats(self, test_db):
        """Test statistics count recorded runs"""
        client.post("/jack?record=true", json={"lam": [1], "n": 2})
        client.post("/jack?record=true", json={"lam": [2], "n": 2})
        response = client.get("/stats/runs")
        assert response.status_code == 200
        data = response.json()
        assert data["total_runs"] == 2
        assert data["by_command"] == {"jack": 2}
