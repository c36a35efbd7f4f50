"""The proxy facade: plaintext SQL in, plaintext results out."""
from __future__ import annotations

import os
import time
import uuid
from dataclasses import dataclass

from dice.backend import Connector, Database, connect as backend_connect
from dice.backend.engine import ResultSet
from dice.cipherkit import Capability
from dice.errors import CapabilityError, DiceError, PolicyError, Unsupported
from dice.rewrite import (NeedsNaive, OpLog, Rewritten, analyze, build_schema, decrypt_with_plan,
                          load_policy, null_policy, rewrite_statement)
from dice.rewrite.rewriter import _scope_for
from dice.sqlkit import ast, parse
from dice.trace import Tracer

from .naive import NaiveRun

MODES = ("strict", "fallback")
STRATEGIES = ("rewritten", "naive", "passthrough")


@dataclass
class SessionConfig:
    backend: object = "mem:"  # address string, Database or Connector
    policy: object = None  # path, mapping or EncryptionPolicy; None reads DICE_POLICY
    mode: str | None = None  # None reads DICE_MODE, then strict
    trace: object = None  # sink address or Tracer; None reads DICE_TRACE
    latency_ms: float = 0
    service_ms: float = 0
    log_sensitive: bool = False
    session_id: str | None = None
    plain: bool = False  # ignore any policy: every statement passes through


@dataclass
class ExecutionReport:
    strategy: str
    rows_transferred: int = 0
    wall_micros: int = 0
    encrypt_ops: int = 0
    decrypt_ops: int = 0
    reason: str | None = None
    ciphertext: str = ""


class _HeldOps(OpLog):
    """OpLog that can hold trace events back until the query event is out."""

    def __init__(self, tracer, session_id):
        super().__init__(tracer, session_id)
        self._held = None

    def hold(self):
        if self.tracer is not None and self._held is None:
            self._held = []

    def release(self):
        held, self._held = self._held, None
        for args in held or ():
            self.tracer.op(*args)

    def record(self, direction, cipher_kind, table, column, plain, cipher, micros,
               sensitive=True):
        if self._held is None:
            super().record(direction, cipher_kind, table, column, plain, cipher, micros, sensitive)
            return
        if direction == "encrypt":
            self.encrypt_ops += 1
        else:
            self.decrypt_ops += 1
        self._held.append((self.session_id, direction, cipher_kind, table, column, plain, cipher,
                           micros, sensitive))


class Session:
    def __init__(self, config: SessionConfig):
        self.config = config
        self.id = config.session_id or uuid.uuid4().hex[:12]
        mode = config.mode or os.environ.get("DICE_MODE") or "strict"
        if mode not in MODES:
            raise PolicyError(f"mode must be one of {', '.join(MODES)}, got {mode!r}")
        self.mode = mode
        if config.plain:
            self.policy = null_policy()
        else:
            source = config.policy if config.policy is not None else os.environ.get("DICE_POLICY")
            self.policy = load_policy(source) if source is not None else null_policy()
        self.schema = build_schema(self.policy)
        trace = config.trace if config.trace is not None else os.environ.get("DICE_TRACE")
        self._own_tracer = isinstance(trace, str)
        self.tracer = Tracer(trace, log_sensitive=config.log_sensitive) if self._own_tracer \
            else trace
        b = config.backend
        try:
            if isinstance(b, Connector):
                self.connector = b
            else:
                self.connector = backend_connect(b, config.latency_ms, config.service_ms)
        except BaseException:
            if self._own_tracer:
                self.tracer.close()
            raise
        self.in_transaction = False
        self.last_report: ExecutionReport | None = None

    # -- execution ---------------------------------------------------------

    @property
    def passthrough(self) -> bool:
        return self.policy.is_null

    def execute(self, sql: str):
        """Run one statement; returns ``(ResultSet, ExecutionReport)``."""
        t0 = time.perf_counter_ns()
        ops = _HeldOps(self.tracer, self.id)
        try:
            stmt = parse(sql)
            rs, report = self._dispatch(sql, stmt, ops)
        except DiceError as exc:
            ops.release()
            if self.tracer is not None:
                self.tracer.error(self.id, exc)
            raise
        report.wall_micros = (time.perf_counter_ns() - t0) // 1000
        report.encrypt_ops, report.decrypt_ops = ops.encrypt_ops, ops.decrypt_ops
        self._track(stmt)
        if self.tracer is not None:
            self.tracer.result(self.id, report)
        self.last_report = report
        return rs, report

    def query(self, sql: str) -> ResultSet:
        return self.execute(sql)[0]

    def _emit_query(self, sql, stmt, ciphertext, strategy, reason, ops):
        if self.tracer is not None:
            self.tracer.query(self.id, stmt, sql, ciphertext, strategy, reason)
        ops.release()

    def _dispatch(self, sql, stmt, ops):
        if self.passthrough:
            self._emit_query(sql, stmt, sql, "passthrough", None, ops)
            rs = self.connector.execute(sql)
            if isinstance(stmt, (ast.CreateTable, ast.DropTable)):
                self._update_schema_plain(stmt)
            return rs, ExecutionReport("passthrough", rs.rows_transferred, ciphertext=sql)
        ops.hold()
        out = rewrite_statement(self.policy, self.schema, stmt, ops)
        if isinstance(out, Rewritten):
            self._emit_query(sql, stmt, out.sql, "rewritten", None, ops)
            raw = self.connector.execute(out.sql)
            if out.schema is not None:
                self.schema = out.schema
            if out.outputs is not None:
                rs = decrypt_with_plan(out.outputs, raw, ops)
            else:
                rs = ResultSet([], [], raw.rows_transferred, raw.affected)
            return rs, ExecutionReport("rewritten", raw.rows_transferred, ciphertext=out.sql)
        if isinstance(out, NeedsNaive):
            if self.mode == "strict":
                raise CapabilityError(f"{out.reason}; naive evaluation is disabled in strict mode")
            return self._naive(sql, stmt, ops, out.reason)
        raise Unsupported(out.reason)

    def _naive(self, sql, stmt, ops, reason):
        ops.hold()
        run = NaiveRun(self, ops)
        try:
            rs = run.execute(stmt)
        finally:
            # the query event goes first even when a fetch failed halfway
            self._emit_query(sql, stmt, "; ".join(run.sql), "naive", reason, ops)
        return rs, ExecutionReport("naive", run.rows_transferred, reason=reason,
                                   ciphertext="; ".join(run.sql))

    def naive_execute(self, sql_or_stmt):
        """Force client-side evaluation of a SELECT, UPDATE or DELETE."""
        t0 = time.perf_counter_ns()
        stmt = parse(sql_or_stmt) if isinstance(sql_or_stmt, str) else sql_or_stmt
        sql = sql_or_stmt if isinstance(sql_or_stmt, str) else ""
        ops = _HeldOps(self.tracer, self.id)
        rs, report = self._naive(sql, stmt, ops, "forced")
        report.wall_micros = (time.perf_counter_ns() - t0) // 1000
        report.encrypt_ops, report.decrypt_ops = ops.encrypt_ops, ops.decrypt_ops
        if self.tracer is not None:
            self.tracer.result(self.id, report)
        self.last_report = report
        return rs, report

    def _track(self, stmt):
        if isinstance(stmt, ast.Begin):
            self.in_transaction = True
        elif isinstance(stmt, (ast.Commit, ast.Rollback)):
            self.in_transaction = False

    def _update_schema_plain(self, stmt):
        if isinstance(stmt, ast.CreateTable) and not self.schema.has_table(stmt.name):
            self.schema = self.schema.with_table(stmt)
        elif isinstance(stmt, ast.DropTable) and self.schema.has_table(stmt.name):
            self.schema = self.schema.without_table(stmt.name)

    # -- introspection -----------------------------------------------------

    def explain(self, sql: str) -> str:
        stmt = parse(sql)
        lines = []
        if self.passthrough:
            lines += ["strategy: passthrough", f"plaintext:  {sql.strip()}",
                      f"ciphertext: {sql.strip()}"]
            return "\n".join(lines)
        out = rewrite_statement(self.policy, self.schema, stmt, OpLog())
        if isinstance(out, Rewritten):
            lines.append("strategy: rewritten")
        elif isinstance(out, NeedsNaive):
            verdict = "naive" if self.mode == "fallback" else "refused in strict mode, naive"
            lines.append(f"strategy: {verdict} (reason: {out.reason})")
        else:
            lines.append(f"strategy: unsupported (reason: {out.reason})")
        lines.append(f"plaintext:  {sql.strip()}")
        if isinstance(out, Rewritten):
            lines.append(f"ciphertext: {out.sql}")
        lines.extend(self._capability_lines(stmt))
        if isinstance(out, NeedsNaive):
            lines.append("verdicts:")
            lines.extend(f"  needs naive: {r}" for r in out.residual)
        if isinstance(out, Rewritten) and out.literals:
            lines.append("literals:")
            for col, plain, cipher in out.literals:
                lines.append(f"  {plain!r} -> {col.qualified} [{col.kind}] -> {cipher!r}")
        elif isinstance(out, Rewritten):
            lines.append("literals: none encrypted")
        return "\n".join(lines)

    def _capability_lines(self, stmt) -> list:
        if not isinstance(stmt, (ast.Select, ast.Update, ast.Delete, ast.Insert)):
            return []
        try:
            scope = _scope_for(self.schema, stmt)
            analyze(stmt, scope)
        except DiceError as exc:
            return [f"schema: {exc}"]
        lines = ["columns:"]
        for _, _, info in scope.bindings:
            for c in info.columns:
                caps = ",".join(cap.name for cap in Capability if c.has(cap)) or "-"
                lines.append(f"  {c.qualified:<28} {c.kind:<12} {caps}")
        return lines

    def tables(self) -> list:
        return [t.name for t in self.schema.tables]

    def backend_tables(self) -> list:
        """Table names exactly as the backend stores them."""
        return [t["name"] for t in self.connector.snapshot()["tables"]]

    def close(self):
        try:
            self.connector.close()
        finally:
            if self._own_tracer and self.tracer is not None:
                self.tracer.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_session(config: SessionConfig | None = None, **kwargs) -> Session:
    if config is None:
        config = SessionConfig(**kwargs)
    return Session(config)


def connect(url, policy=None, mode=None, trace=None, **kwargs) -> Session:
    """``dice:<backend>`` encrypts per policy; ``plain:<backend>`` passes everything through.

    A bare backend address (or ``Database``) behaves like ``dice:``.
    """
    plain = False
    backend = url
    if isinstance(url, str):
        if url.startswith("dice:"):
            backend = url[5:]
        elif url.startswith("plain:"):
            backend, plain = url[6:], True
        if not backend:
            backend = "mem:"
    elif not isinstance(url, (Database, Connector)):
        raise PolicyError(f"cannot connect to {url!r}")
    return Session(SessionConfig(backend, policy, mode, trace, plain=plain, **kwargs))
