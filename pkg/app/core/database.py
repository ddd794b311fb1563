"""Engine and session management for the SQLite report archive.

Verification runs can append their EstimateReports to a local SQLite
database so measured constants from different runs can be compared
later. Studies may archive from worker threads, hence the WAL journal
and ``check_same_thread=False``.

SQLite configuration:
    - **WAL (Write-Ahead Logging)**: readers are not blocked while a run
      appends its reports.
    - **Foreign keys**: enforced on every connection.
"""

from collections.abc import Iterator
from contextlib import contextmanager
from functools import lru_cache

from sqlalchemy import Engine
from sqlalchemy import event as sa_event
from sqlmodel import Session, SQLModel, create_engine

from app.core.config import settings

connect_args = {"check_same_thread": False}


def set_sqlite_pragma(dbapi_connection, connection_record):
    """Configure SQLite pragmas on each new connection.

    These settings are connection-level, so they are applied every time
    the pool opens a connection.
    """
    cursor = dbapi_connection.cursor()
    cursor.execute("PRAGMA journal_mode=WAL")
    cursor.execute("PRAGMA foreign_keys=ON")
    cursor.close()


@lru_cache(maxsize=None)
def get_engine(database_url: str | None = None) -> Engine:
    """Return the (cached) engine for ``database_url`` or the configured one.

    The engine is created lazily so that commands which never archive do
    not touch the filesystem.
    """
    engine = create_engine(
        database_url or settings.database_url,
        connect_args=connect_args,
        echo=settings.debug,
    )
    sa_event.listen(engine, "connect", set_sqlite_pragma)
    return engine


def create_db_and_tables(engine: Engine | None = None):
    """Create all archive tables."""
    # Registers ReportRecord on the metadata
    import app.models.archive  # noqa: F401

    SQLModel.metadata.create_all(engine or get_engine())


@contextmanager
def get_session(engine: Engine | None = None) -> Iterator[Session]:
    """Open a session on ``engine`` (the archive engine by default)."""
    with Session(engine or get_engine()) as session:
        yield session
