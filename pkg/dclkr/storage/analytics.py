"""Optional run-record database sink.

Enabled by ``DCLKR_DATABASE_URL``; any SQLAlchemy URL works (SQLite for
local use, PostgreSQL through psycopg2). Failures are logged and never
change a command's outcome.
"""
from datetime import datetime, timezone
from typing import Iterable, Optional
import logging

from dclkr.core.sweep import RunRecord

logger = logging.getLogger(__name__)

try:
    from sqlalchemy import Column, DateTime, Float, Integer, Numeric, String, create_engine
    from sqlalchemy.orm import declarative_base, sessionmaker
    SQLALCHEMY_AVAILABLE = True
except ImportError:
    SQLALCHEMY_AVAILABLE = False

if SQLALCHEMY_AVAILABLE:
    Base = declarative_base()

    class RunRecordRow(Base):
        __tablename__ = "run_records"

        id = Column(Integer, primary_key=True, autoincrement=True)
        algorithm = Column(String(32), nullable=False)
        m = Column(Integer, nullable=False)
        n = Column(Integer, nullable=False)
        n0 = Column(Integer, nullable=False)
        # u64 seeds overflow BIGINT
        seed = Column(Numeric(20, 0), nullable=False)
        round = Column(String(16), nullable=False)
        rmse = Column(Float, nullable=False)
        wall_ms = Column(Float, nullable=True)
        created_at = Column(DateTime, default=lambda: datetime.now(timezone.utc), nullable=False)

        @classmethod
        def from_record(cls, r: RunRecord) -> "RunRecordRow":
            return cls(algorithm=r.algorithm, m=r.m, n=r.n, n0=r.n0, seed=r.seed,
                       round=str(r.round), rmse=r.rmse, wall_ms=r.wall_ms)


class RunDatabase:
    """Engine plus session factory for one database URL."""

    def __init__(self, url: str):
        self.url = url
        self.engine = create_engine(url, pool_pre_ping=True)
        self.sessions = sessionmaker(bind=self.engine, expire_on_commit=False)

    def create_tables(self) -> None:
        Base.metadata.create_all(bind=self.engine)

    def insert(self, records: Iterable[RunRecord]) -> int:
        rows = [RunRecordRow.from_record(r) for r in records]
        with self.sessions() as session, session.begin():
            session.add_all(rows)
        return len(rows)

    def dispose(self) -> None:
        self.engine.dispose()


_database: Optional[RunDatabase] = None


def init_database(database_url: str) -> bool:
    """Connect the sink; False when SQLAlchemy is missing, the URL is empty, or setup fails."""
    global _database
    if not SQLALCHEMY_AVAILABLE or not database_url:
        return False
    if _database is not None and _database.url == database_url:
        return True
    reset()
    try:
        _database = RunDatabase(database_url)
    except Exception as e:
        logger.error(f"Could not open run database: {e}")
        return False
    return True


def create_tables() -> None:
    if _database is None:
        return
    try:
        _database.create_tables()
    except Exception as e:
        logger.warning(f"Could not create run_records table: {e}")


def log_records(records: Iterable[RunRecord]) -> int:
    """Store records; returns how many were written (0 when the sink is off or fails)."""
    if _database is None:
        return 0
    try:
        return _database.insert(records)
    except Exception as e:
        logger.warning(f"Could not store run records: {e}")
        return 0


def reset() -> None:
    global _database
    if _database is not None:
        _database.dispose()
    _database = None
