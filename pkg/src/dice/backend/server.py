"""Threaded TCP server speaking the framed JSON protocol.

Every connection gets its own engine session, so transactions are isolated
per connection; a dropped connection rolls back whatever it left open.
"""
from __future__ import annotations

import logging
import socket
import socketserver
import threading
import time

from dice.errors import BindError, DiceError

from .engine import Database
from .wire import FrameError, error_doc, parse_address, read_frame, result_to_doc, write_frame

log = logging.getLogger(__name__)


class _Handler(socketserver.BaseRequestHandler):
    server: "_TCPServer"

    def handle(self):
        sock: socket.socket = self.request
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        session = self.server.db.session()
        try:
            while True:
                try:
                    req = read_frame(sock)
                except FrameError as exc:
                    write_frame(sock, error_doc(None, exc))
                    return
                if req is None:
                    return
                if self.server.latency_s:
                    time.sleep(self.server.latency_s)
                write_frame(sock, self._answer(session, req))
        except OSError as exc:
            log.debug("connection dropped: %s", exc)
        finally:
            try:
                session.close()
            except DiceError:
                pass

    def _answer(self, session, req: dict) -> dict:
        req_id = req.get("id")
        try:
            if req.get("op") == "snapshot":
                return {"id": req_id, "snapshot": self.server.db.to_doc(), "error": None}
            sql = req.get("sql")
            if not isinstance(sql, str):
                raise FrameError("request needs an 'sql' string")
            return result_to_doc(session.execute(sql), req_id)
        except (DiceError, FrameError) as exc:
            return error_doc(req_id, exc)


class _TCPServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, db: Database, latency_ms: int):
        self.db = db
        self.latency_s = latency_ms / 1000.0
        super().__init__(address, _Handler)


class Server:
    """A running backend; ``address`` is the actual bound ``host:port``."""

    def __init__(self, tcp: _TCPServer):
        self._tcp = tcp
        host, port = tcp.server_address[:2]
        self.address = f"{host}:{port}"
        self._thread: threading.Thread | None = None

    def start(self) -> "Server":
        self._thread = threading.Thread(target=self._tcp.serve_forever, name="dice-server",
                                        daemon=True)
        self._thread.start()
        return self

    def serve_forever(self):
        self._tcp.serve_forever()

    def shutdown(self):
        self._tcp.shutdown()
        self._tcp.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()


def serve(db: Database, listen_address: str = "127.0.0.1:0", latency_ms: int = 0,
          background: bool = True) -> Server:
    if latency_ms < 0:
        raise ValueError("latency_ms must be non-negative")
    host, port = parse_address(listen_address)
    try:
        tcp = _TCPServer((host, port), db, latency_ms)
    except OSError as exc:
        raise BindError(f"cannot listen on {listen_address}: {exc}") from exc
    server = Server(tcp)
    return server.start() if background else server
