"""Text rendering of trace streams from a file or a listening socket."""
from __future__ import annotations

import queue
import socketserver
import threading
import time

from dice.errors import IoError

from .events import TraceEvent, render_event


def render_lines(lines, origin: str = "trace"):
    """Yield rendered text for each NDJSON line; malformed lines become warnings."""
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            ev = TraceEvent.from_json(line)
        except (ValueError, TypeError) as exc:
            yield f"warning: {origin} line {n}: malformed trace event ({exc})"
            continue
        yield render_event(ev)


def _follow_file(path, poll_s: float, stop):
    try:
        f = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot open trace file {path}: {exc}") from exc
    with f:
        buf = ""
        while True:
            chunk = f.readline()
            if chunk:
                buf += chunk
                if buf.endswith("\n"):
                    yield buf
                    buf = ""
                continue
            if stop is not None and stop():
                return
            time.sleep(poll_s)


def _listen(address: str, stop):
    from dice.backend.wire import parse_address
    host, port = parse_address(address)
    lines: queue.Queue = queue.Queue()

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for raw in self.rfile:
                lines.put(raw.decode("utf-8", "replace"))

    class Server(socketserver.ThreadingTCPServer):
        daemon_threads = True
        allow_reuse_address = True

    try:
        server = Server((host, port), Handler)
    except OSError as exc:
        raise IoError(f"cannot listen on {address}: {exc}") from exc
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        while True:
            try:
                yield lines.get(timeout=0.2)
            except queue.Empty:
                if stop is not None and stop():
                    return
    finally:
        server.shutdown()
        server.server_close()


def monitor(source: str, follow: bool = False, stop=None, poll_s: float = 0.2):
    """Rendered lines from ``source``: a trace file, or ``tcp://host:port`` to listen on.

    With ``follow`` a file is tailed until ``stop()`` returns true; a listening
    source is always live.
    """
    if source.startswith("tcp://"):
        yield from render_lines(_listen(source, stop), source)
        return
    if follow:
        yield from render_lines(_follow_file(source, poll_s, stop), source)
        return
    try:
        with open(source, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise IoError(f"cannot open trace file {source}: {exc}") from exc
    yield from render_lines(text.splitlines(), source)
