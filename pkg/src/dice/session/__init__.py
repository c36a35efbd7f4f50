"""Driver-like sessions that encrypt and decrypt transparently."""
from .core import (MODES, STRATEGIES, ExecutionReport, Session, SessionConfig, connect,
                   open_session)
from .naive import NaiveRun


def execute(session: Session, sql: str):
    return session.execute(sql)


def naive_execute(session: Session, sql_or_stmt):
    return session.naive_execute(sql_or_stmt)


def explain(session: Session, sql: str) -> str:
    return session.explain(sql)


__all__ = ["ExecutionReport", "MODES", "NaiveRun", "STRATEGIES", "Session", "SessionConfig",
           "connect", "execute", "explain", "naive_execute", "open_session"]
