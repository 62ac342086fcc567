import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Application settings"""

    # API Settings
    PROJECT_NAME: str = "Theta Walk Ensembles"
    VERSION: str = "1.0.0"

    # Database Settings (run registry)
    DATABASE_URL: str = os.getenv(
        "DATABASE_URL",
        "sqlite:///./runs.db"
    )

    # Server Settings
    HOST: str = os.getenv("HOST", "0.0.0.0")
    PORT: int = int(os.getenv("PORT", "8000"))

    # CORS Settings
    BACKEND_CORS_ORIGINS: list = ["*"]

    # Logging Settings
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE: Optional[str] = os.getenv("LOG_FILE") or None

    # Enumeration caps
    ENUMERATION_CAP: int = int(os.getenv("ENUMERATION_CAP", "20"))
    LOOP_ENUMERATION_CAP: int = int(os.getenv("LOOP_ENUMERATION_CAP", "12"))
    MACDONALD_ORACLE_N: int = int(os.getenv("MACDONALD_ORACLE_N", "10"))
    STATE_CAP: int = int(os.getenv("STATE_CAP", "1000000"))
    ARRAY_LAYER_CAP: int = int(os.getenv("ARRAY_LAYER_CAP", "5000000"))
    ARRAY_CHUNK: int = int(os.getenv("ARRAY_CHUNK", "2097152"))
    EXACT_PAIR_CAP: int = int(os.getenv("EXACT_PAIR_CAP", "1000000"))

    # Numerical tolerances
    LATTICE_TOL: float = float(os.getenv("LATTICE_TOL", "1e-9"))
    LEVEL_LINE_FACTOR: float = float(os.getenv("LEVEL_LINE_FACTOR", "2.0"))
    SIGMA_ETA: float = float(os.getenv("SIGMA_ETA", "1e-6"))
    LOBACHEVSKY_TOL: float = float(os.getenv("LOBACHEVSKY_TOL", "1e-12"))
    POCHHAMMER_TOL: float = float(os.getenv("POCHHAMMER_TOL", "1e-16"))

    # Limit-shape solver
    SOLVER_TOL: float = float(os.getenv("SOLVER_TOL", "1e-9"))
    SOLVER_PATIENCE: int = int(os.getenv("SOLVER_PATIENCE", "50"))
    SOLVER_MAX_ITER: int = int(os.getenv("SOLVER_MAX_ITER", "20000"))
    PROJECTION_TOL: float = float(os.getenv("PROJECTION_TOL", "1e-12"))
    PROJECTION_MAX_SWEEPS: int = int(os.getenv("PROJECTION_MAX_SWEEPS", "5000"))
    GRID_STEPS: int = int(os.getenv("GRID_STEPS", "64"))

    # Sampling
    BURN_IN_FACTOR: int = int(os.getenv("BURN_IN_FACTOR", "10"))
    MCMC_VERIFY_EVERY: int = int(os.getenv("MCMC_VERIFY_EVERY", "100"))
    RNG_ALGORITHM: str = "numpy.random.Philox"

    # Loop equation
    CONTOUR_NODES: int = int(os.getenv("CONTOUR_NODES", "64"))
    CONTOUR_RADIUS: float = float(os.getenv("CONTOUR_RADIUS", "0.1"))

    # Workers
    MAX_THREADS: int = int(os.getenv("MAX_THREADS", "4"))

settings = Settings()
