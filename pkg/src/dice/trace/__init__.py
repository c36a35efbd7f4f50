"""Streaming trace of queries and cipher operations, plus a text monitor."""
from .events import KINDS, REDACTED, TraceEvent, render_event
from .monitor import monitor, render_lines
from .tracer import (QUEUE_SIZE, FileSink, MemorySink, StreamSink, TcpSink, Tracer, open_sink,
                     redact_sql)


def emit(sink, event: TraceEvent):
    """Send one event; a ``None`` sink is the no-op path."""
    if sink is not None:
        sink.emit(event)


__all__ = ["FileSink", "KINDS", "MemorySink", "QUEUE_SIZE", "REDACTED", "StreamSink", "TcpSink",
           "TraceEvent", "Tracer", "emit", "monitor", "open_sink", "redact_sql", "render_event",
           "render_lines"]
