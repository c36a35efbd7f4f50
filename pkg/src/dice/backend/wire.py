"""Length-prefixed JSON frames.

Each frame is a 4-byte big-endian unsigned length followed by that many bytes
of UTF-8 JSON.  Requests are ``{"id", "sql"}`` or ``{"id", "op": "snapshot"}``;
responses are ``{"id", "columns", "rows", "affected", "error"}`` where
``error`` is null or ``{"type", "message"}``.
"""
from __future__ import annotations

import json
import socket
import struct

from dice.errors import IoError

from .engine import ResultSet

MAX_FRAME = 256 * 1024 * 1024
_LEN = struct.Struct(">I")


class FrameError(ValueError):
    """The peer sent bytes that are not a valid frame."""


def encode_frame(doc: dict) -> bytes:
    body = json.dumps(doc, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    if len(body) > MAX_FRAME:
        raise FrameError(f"frame of {len(body)} bytes exceeds the limit")
    return _LEN.pack(len(body)) + body


def decode_body(body: bytes) -> dict:
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"frame is not UTF-8 JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FrameError("frame must hold a JSON object")
    return doc


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            if buf:
                raise FrameError("connection closed mid-frame")
            return None
        buf += chunk
    return bytes(buf)


def read_frame(sock: socket.socket) -> dict | None:
    """Next frame from ``sock``, or None on a clean end of stream."""
    head = _recv_exact(sock, 4)
    if head is None:
        return None
    (n,) = _LEN.unpack(head)
    if n > MAX_FRAME:
        raise FrameError(f"announced frame length {n} exceeds the limit")
    body = _recv_exact(sock, n) if n else b""
    if body is None:
        raise FrameError("connection closed mid-frame")
    return decode_body(body)


def write_frame(sock: socket.socket, doc: dict):
    sock.sendall(encode_frame(doc))


def result_to_doc(rs: ResultSet, req_id) -> dict:
    return {"id": req_id, "columns": list(rs.columns), "rows": [list(r) for r in rs.rows],
            "affected": rs.affected, "error": None}


def doc_to_result(doc: dict) -> ResultSet:
    rows = [tuple(r) for r in doc.get("rows", [])]
    return ResultSet(list(doc.get("columns", [])), rows, len(rows), doc.get("affected", 0))


def error_doc(req_id, exc: BaseException) -> dict:
    return {"id": req_id, "columns": [], "rows": [], "affected": 0,
            "error": {"type": type(exc).__name__, "message": str(exc)}}


def parse_address(addr: str) -> tuple[str, int]:
    text = addr[len("tcp://"):] if addr.startswith("tcp://") else addr
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise IoError(f"bad address {addr!r}; expected host:port")
    return host or "127.0.0.1", int(port)
