"""Trace events and their newline-delimited JSON encoding."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, fields

KINDS = ("query", "encrypt", "decrypt", "result", "error")
REDACTED = "<redacted>"


@dataclass
class TraceEvent:
    kind: str
    session_id: str = ""
    ts_micros: int = 0
    plaintext: str = ""
    ciphertext: str = ""
    cipher_kind: str = ""
    table: str = ""
    column: str = ""
    duration_micros: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown trace event kind {self.kind!r}")
        if not self.ts_micros:
            self.ts_micros = time.time_ns() // 1000

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TraceEvent":
        doc = json.loads(line)
        if not isinstance(doc, dict):
            raise ValueError("trace line is not a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown trace field(s): {', '.join(sorted(unknown))}")
        return cls(**doc)


def _short(value, width: int) -> str:
    s = str(value)
    return s if len(s) <= width else s[:width - 3] + "..."


def render_event(ev: TraceEvent, width: int = 200) -> str:
    """One aligned text line: time, session, kind, then kind-specific detail."""
    ts = time.strftime("%H:%M:%S", time.localtime(ev.ts_micros / 1e6))
    head = f"{ts}.{ev.ts_micros % 1_000_000:06d} {ev.session_id[:8]:<8} {ev.kind:<7}"
    if ev.kind == "query":
        strategy = ev.extra.get("strategy", "")
        return (f"{head} [{strategy}] {_short(ev.plaintext, width)}\n"
                f"{'':<{len(head)}} -> {_short(ev.ciphertext, width)}")
    if ev.kind in ("encrypt", "decrypt"):
        where = f"{ev.table}.{ev.column}" if ev.table != "#ident" else "identifier"
        arrow = "->" if ev.kind == "encrypt" else "<-"
        return (f"{head} {ev.cipher_kind:<12} {where:<28} {_short(ev.plaintext, 40)} {arrow} "
                f"{_short(ev.ciphertext, 60)} ({ev.duration_micros} us)")
    if ev.kind == "result":
        detail = " ".join(f"{k}={v}" for k, v in ev.extra.items())
        return f"{head} {detail} ({ev.duration_micros} us)"
    return f"{head} {_short(ev.plaintext, width)}"
