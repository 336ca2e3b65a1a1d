#!/usr/bin/env python3
"""
Database utility functions.
Handles engine setup and session management for the sweep archive.
"""

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

from sqlalchemy.engine import Engine
from sqlmodel import Session, SQLModel, create_engine

logger = logging.getLogger(__name__)

# Global database engine (set by init_database)
_db_engine: Optional[Engine] = None


def init_database(database: Path, echo: bool = False) -> Engine:
    """
    Open (and create if needed) the SQLite archive and make it current.

    Args:
        database: Path of the SQLite file
        echo: Log emitted SQL

    Returns:
        The engine now used by get_db_session
    """
    global _db_engine
    database = Path(database)
    database.parent.mkdir(parents=True, exist_ok=True)
    engine = create_engine(f"sqlite:///{database}", echo=echo)

    # Import models so their tables are registered on the metadata
    from vanet_aggregator import database as _models  # noqa: F401

    SQLModel.metadata.create_all(engine)
    _db_engine = engine
    logger.info("using sweep archive %s", database)
    return engine


def get_db_engine() -> Optional[Engine]:
    return _db_engine


@contextmanager
def get_db_session():
    """
    Context manager for database sessions.

    Yields:
        SQLModel Session

    Raises:
        RuntimeError: If database engine is not initialized
    """
    if _db_engine is None:
        raise RuntimeError("Database engine not initialized")

    with Session(_db_engine) as session:
        yield session
