"""Connectors: the single interface the proxy uses to reach a backend.

``RemoteConnector`` talks to a server over TCP; ``LocalConnector`` runs
against an in-process ``Database`` and can imitate a remote one through
``latency_ms`` (per-request delay) and ``service_ms`` (time the backend spends
per statement inside a single service slot, modelling a database server with
its own, limited, hardware).

The slot is a reservation clock rather than a lock held across a sleep: each
request books the next free ``service_ms`` interval and sleeps until it ends.
A client that wakes late (waiting for the GIL behind busy proxies) therefore
does not delay the service of the requests queued behind it, just as a
separate database machine would not slow down because its clients are busy.
"""
from __future__ import annotations

import itertools
import json
import socket
import threading
import time
from pathlib import Path

from dice.errors import IoError, RemoteError

from .engine import Database, ResultSet
from .wire import FrameError, doc_to_result, parse_address, read_frame, write_frame


class Connector:
    def execute(self, sql: str) -> ResultSet:
        raise NotImplementedError

    def snapshot(self) -> dict:
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class RemoteConnector(Connector):
    def __init__(self, host: str, port: int, timeout: float = 60.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise IoError(f"cannot connect to {host}:{port}: {exc}") from exc
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._ids = itertools.count(1)
        self.address = f"{host}:{port}"

    def _call(self, req: dict) -> dict:
        if self._sock is None:
            raise IoError("connector is closed")
        req_id = next(self._ids)
        req["id"] = req_id
        try:
            write_frame(self._sock, req)
            resp = read_frame(self._sock)
        except (OSError, FrameError) as exc:
            self.close()
            raise IoError(f"connection to {self.address} failed: {exc}") from exc
        if resp is None:
            self.close()
            raise IoError(f"{self.address} closed the connection")
        if resp.get("error"):
            err = resp["error"]
            raise RemoteError(err.get("message", ""), err.get("type", "Error"))
        if resp.get("id") != req_id:
            self.close()
            raise IoError(f"response id {resp.get('id')} does not match request {req_id}")
        return resp

    def execute(self, sql: str) -> ResultSet:
        return doc_to_result(self._call({"sql": sql}))

    def snapshot(self) -> dict:
        return self._call({"op": "snapshot"})["snapshot"]

    def close(self):
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None


class LocalConnector(Connector):
    def __init__(self, db: Database, latency_ms: float = 0, service_ms: float = 0,
                 slot: "ServiceSlot | None" = None):
        self.db = db
        self._session = db.session()
        self.latency_s = latency_ms / 1000.0
        self.service_s = service_ms / 1000.0
        self._slot = slot if slot is not None else _slot_for(db)

    def execute(self, sql: str) -> ResultSet:
        if self.latency_s:
            time.sleep(self.latency_s)
        if self.service_s:
            self._slot.serve(self.service_s)
        rs = self._session.execute(sql)
        return ResultSet(rs.columns, rs.rows, len(rs.rows), rs.affected)

    def snapshot(self) -> dict:
        return self.db.to_doc()

    def close(self):
        self._session.close()


class ServiceSlot:
    """FIFO single server: requests are served back to back, ``seconds`` each."""

    def __init__(self):
        self._lock = threading.Lock()
        self._free_at = 0.0

    def serve(self, seconds: float):
        with self._lock:
            now = time.perf_counter()
            done = max(now, self._free_at) + seconds
            self._free_at = done
        delay = done - time.perf_counter()
        if delay > 0:
            time.sleep(delay)


_SLOTS: dict = {}
_SLOTS_LOCK = threading.Lock()


def _slot_for(db: Database) -> ServiceSlot:
    with _SLOTS_LOCK:
        return _SLOTS.setdefault(id(db), ServiceSlot())


def load_snapshot(path) -> Database:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read snapshot {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"snapshot {path} is not JSON: {exc}") from exc
    return Database.from_doc(doc)


def save_snapshot(db_or_doc, path):
    doc = db_or_doc.to_doc() if isinstance(db_or_doc, Database) else db_or_doc
    try:
        Path(path).write_text(json.dumps(doc, ensure_ascii=False), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write snapshot {path}: {exc}") from exc


def connect(address, latency_ms: float = 0, service_ms: float = 0) -> Connector:
    """Open a connector.

    ``address`` is a ``Database`` object, ``mem:`` (fresh empty database),
    ``mem:<snapshot.json>``, or ``host:port`` / ``tcp://host:port``.
    """
    if isinstance(address, Database):
        return LocalConnector(address, latency_ms, service_ms)
    if address.startswith("mem:"):
        path = address[4:]
        db = load_snapshot(path) if path else Database()
        return LocalConnector(db, latency_ms, service_ms)
    host, port = parse_address(address)
    return RemoteConnector(host, port)
