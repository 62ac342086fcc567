from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool
import logging

from config import settings

# SQLite by default; any SQLAlchemy URL works for a shared registry
SQLALCHEMY_DATABASE_URL = settings.DATABASE_URL


def make_engine(url: str):
    if url.startswith("sqlite"):
        return create_engine(
            url,
            connect_args={"check_same_thread": False},
            poolclass=StaticPool,
        )
    return create_engine(url, pool_pre_ping=True)


engine = make_engine(SQLALCHEMY_DATABASE_URL)

SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


def init_db(bind=None) -> None:
    """Create the registry tables if they are missing"""
    from models.base import Base
    from models.run import RunRecord  # noqa: F401

    Base.metadata.create_all(bind=bind or engine)


# Dependency to get database session
def get_db():
    db = SessionLocal()
    try:
        logging.getLogger("ThetaWalks").debug("DB: session opened")
        yield db
    finally:
        logging.getLogger("ThetaWalks").debug("DB: session closed")
        db.close()
