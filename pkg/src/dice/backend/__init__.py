"""Untrusted backend: in-memory engine, framed TCP server and connectors."""
from .client import (Connector, LocalConnector, RemoteConnector, connect, load_snapshot,
                     save_snapshot)
from .engine import Database, EngineSession, ResultSet, Table, execute, mem_execute
from .server import Server, serve

__all__ = ["Connector", "LocalConnector", "RemoteConnector", "connect", "load_snapshot",
           "save_snapshot", "Database", "EngineSession", "ResultSet", "Table", "execute",
           "mem_execute", "Server", "serve"]
