"""Non-blocking trace emission.

Producers put events on a bounded queue; one writer thread drains it into the
sink.  A full queue drops the event and bumps ``dropped``; the writer later
reports the running total as an ``error`` event with ``extra.dropped``.
"""
from __future__ import annotations

import queue
import socket
import sys
import threading

from dice.errors import IoError
from dice.sqlkit import Visitor, ast, render, transform

from .events import REDACTED, TraceEvent

QUEUE_SIZE = 8192


class FileSink:
    def __init__(self, path):
        try:
            self._f = open(path, "a", encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot open trace file {path}: {exc}") from exc

    def write(self, line: str):
        self._f.write(line + "\n")

    def flush(self):
        self._f.flush()

    def close(self):
        self._f.close()


class StreamSink:
    def __init__(self, stream=None):
        self._s = stream or sys.stderr

    def write(self, line: str):
        self._s.write(line + "\n")

    def flush(self):
        self._s.flush()

    def close(self):
        self.flush()


class TcpSink:
    def __init__(self, host: str, port: int):
        try:
            self._sock = socket.create_connection((host, port), timeout=10)
        except OSError as exc:
            raise IoError(f"cannot reach trace listener {host}:{port}: {exc}") from exc
        self._f = self._sock.makefile("w", encoding="utf-8")

    def write(self, line: str):
        self._f.write(line + "\n")

    def flush(self):
        self._f.flush()

    def close(self):
        try:
            self._f.close()
        finally:
            self._sock.close()


class MemorySink:
    """Keeps lines in a list; used by tests and the bench harness."""

    def __init__(self):
        self.lines: list = []

    def write(self, line: str):
        self.lines.append(line)

    def flush(self):
        pass

    def close(self):
        pass

    def events(self) -> list:
        return [TraceEvent.from_json(x) for x in self.lines]


def open_sink(address: str):
    """``-`` (stderr), ``tcp://host:port``, or a file path."""
    if address == "-":
        return StreamSink()
    if address.startswith("tcp://"):
        from dice.backend.wire import parse_address
        return TcpSink(*parse_address(address))
    return FileSink(address)


class _Redactor(Visitor):
    def literal(self, lit):
        return lit if isinstance(lit, ast.NullLit) else ast.StrLit("?")


def redact_sql(stmt) -> str:
    """Plaintext SQL with every literal replaced by '?'."""
    return render(transform(stmt, _Redactor()))


class Tracer:
    def __init__(self, sink, queue_size: int = QUEUE_SIZE, log_sensitive: bool = False):
        self.sink = open_sink(sink) if isinstance(sink, str) else sink
        self.log_sensitive = log_sensitive
        self.dropped = 0
        self.sink_errors = 0
        self._reported = 0
        self._q: queue.Queue = queue.Queue(maxsize=queue_size)
        self._closed = False
        self._thread = threading.Thread(target=self._run, name="dice-trace", daemon=True)
        self._thread.start()

    # -- producer side -----------------------------------------------------

    def emit(self, event: TraceEvent):
        if self._closed:
            return
        try:
            self._q.put_nowait(event)
        except queue.Full:
            self.dropped += 1

    def query(self, session_id: str, stmt, plaintext: str, ciphertext: str, strategy: str,
              reason: str | None = None):
        shown = plaintext if self.log_sensitive or stmt is None else redact_sql(stmt)
        extra = {"strategy": strategy}
        if reason:
            extra["reason"] = reason
        self.emit(TraceEvent("query", session_id, plaintext=shown, ciphertext=ciphertext,
                             extra=extra))

    def op(self, session_id: str, direction: str, cipher_kind: str, table: str, column: str,
           plain, cipher, micros: int, sensitive: bool = True):
        shown = str(plain) if self.log_sensitive or not sensitive else REDACTED
        self.emit(TraceEvent(direction, session_id, plaintext=shown, ciphertext=str(cipher),
                             cipher_kind=cipher_kind, table=table, column=column,
                             duration_micros=int(micros)))

    def result(self, session_id: str, report):
        self.emit(TraceEvent("result", session_id, duration_micros=report.wall_micros,
                             extra={"strategy": report.strategy,
                                    "rows_transferred": report.rows_transferred,
                                    "encrypt_ops": report.encrypt_ops,
                                    "decrypt_ops": report.decrypt_ops}))

    def error(self, session_id: str, exc: BaseException):
        self.emit(TraceEvent("error", session_id, plaintext=f"{type(exc).__name__}: {exc}"))

    # -- consumer side -----------------------------------------------------

    def _write(self, event: TraceEvent):
        try:
            self.sink.write(event.to_json())
        except Exception:  # a broken sink must never reach the query path
            self.sink_errors += 1
            self.dropped += 1

    def _run(self):
        while True:
            ev = self._q.get()
            try:
                if ev is None:
                    return
                self._write(ev)
                if self.dropped != self._reported:
                    self._reported = self.dropped
                    self._write(TraceEvent("error", "", plaintext="trace events dropped",
                                           extra={"dropped": self._reported}))
                if self._q.empty():
                    try:
                        self.sink.flush()
                    except Exception:
                        self.sink_errors += 1
            finally:
                self._q.task_done()

    def flush(self):
        """Block until every queued event reached the sink."""
        self._q.join()

    def close(self):
        if self._closed:
            return
        self._closed = True
        self._q.put(None)
        self._thread.join(timeout=10)
        if self.dropped != self._reported:
            self._reported = self.dropped
            self._write(TraceEvent("error", "", plaintext="trace events dropped",
                                   extra={"dropped": self._reported}))
        try:
            self.sink.close()
        except Exception:
            self.sink_errors += 1

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
