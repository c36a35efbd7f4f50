"""Plaintext statement -> ciphertext statement, and ciphertext rows -> plaintext rows.

The rewrite happens in three passes over the plaintext AST:

1. capability analysis: every operator applied to an encrypted column must be
   supported by that column's cipher; anything else is recorded as a reason
   for naive (client-side) evaluation;
2. literal binding: each literal is tied to the column whose cipher must
   encrypt it, or marked free;
3. transformation: identifiers and bound literals are replaced, the tree shape
   is kept.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from dice.cipherkit import Capability
from dice.errors import AmbiguousBinding, SchemaError
from dice.sqlkit import Visitor, ast, default_label, render, transform

from .schema import ColumnInfo, SchemaMap, TableInfo

EQ, ORD, LIKE = Capability.EQUALITY, Capability.ORDER, Capability.LIKE_PATTERN


# -- outcomes -----------------------------------------------------------------

@dataclass(frozen=True)
class OutputCol:
    label: str
    column: ColumnInfo | None  # None: value is not encrypted (COUNT, free expressions)


@dataclass
class Rewritten:
    statement: object
    sql: str
    outputs: list | None = None
    literals: list = field(default_factory=list)  # (ColumnInfo, plaintext, ciphertext)
    schema: SchemaMap | None = None  # schema after DDL, else None


@dataclass(frozen=True)
class NeedsNaive:
    reason: str
    residual: tuple = ()


@dataclass(frozen=True)
class UnsupportedOutcome:
    reason: str


class OpLog:
    """Counts cipher invocations and forwards them to an optional tracer."""

    def __init__(self, tracer=None, session_id: str = ""):
        self.tracer = tracer
        self.session_id = session_id
        self.encrypt_ops = 0
        self.decrypt_ops = 0

    def record(self, direction: str, cipher_kind: str, table: str, column: str, plain, cipher,
               micros: int, sensitive: bool = True):
        if direction == "encrypt":
            self.encrypt_ops += 1
        else:
            self.decrypt_ops += 1
        if self.tracer is not None:
            self.tracer.op(self.session_id, direction, cipher_kind, table, column, plain, cipher, micros, sensitive)


# -- scopes -------------------------------------------------------------------

class Scope:
    """Plaintext name resolution mirroring the engine's rules."""

    def __init__(self, schema: SchemaMap, refs, labels=()):
        self.schema = schema
        self.bindings: list = []  # (spelling, TableRef, TableInfo)
        for ref in refs:
            info = schema.table(ref.name)
            if any(b.upper() == ref.binding.upper() for b, _, _ in self.bindings):
                raise SchemaError(f"duplicate table binding {ref.binding}")
            self.bindings.append((ref.binding, ref, info))
        self.labels = list(labels)

    def binding(self, qualifier: str):
        for spelling, ref, info in self.bindings:
            if spelling.upper() == qualifier.upper():
                return spelling, ref, info
        raise SchemaError(f"unknown table or alias {qualifier}")

    def lookup(self, ref: ast.ColumnRef) -> ColumnInfo | None:
        if ref.table is not None:
            info = self.binding(ref.table)[2]
            return info.column(ref.name) if info.has_column(ref.name) else None
        hits = [info.column(ref.name) for _, _, info in self.bindings if info.has_column(ref.name)]
        if len(hits) > 1:
            raise SchemaError(f"ambiguous column {ref.name}")
        return hits[0] if hits else None

    def resolve(self, ref: ast.ColumnRef) -> ColumnInfo:
        col = self.lookup(ref)
        if col is None:
            name = f"{ref.table}.{ref.name}" if ref.table else ref.name
            raise SchemaError(f"unknown column {name}")
        return col

    def label_index(self, ref: ast.ColumnRef) -> int | None:
        if ref.table is None:
            for i, lab in enumerate(self.labels):
                if lab is not None and lab.upper() == ref.name.upper():
                    return i
        return None


def _scope_for(schema: SchemaMap, stmt) -> Scope:
    if isinstance(stmt, ast.Select):
        labels = [None if isinstance(p, ast.Star) else p.label for p in stmt.columns]
        return Scope(schema, stmt.tables, labels)
    if isinstance(stmt, (ast.Update, ast.Delete)):
        return Scope(schema, [stmt.table])
    if isinstance(stmt, ast.Insert):
        return Scope(schema, [ast.TableRef(stmt.table)])
    return Scope(schema, [])


def _col_of(e, scope: Scope) -> ColumnInfo | None:
    """The column whose ciphertext domain ``e`` evaluates in, if any."""
    if isinstance(e, ast.ColumnRef):
        return scope.resolve(e)
    if isinstance(e, ast.Aggregate) and e.func in ("MIN", "MAX") and isinstance(e.arg, ast.ColumnRef):
        return scope.resolve(e.arg)
    return None


def _encrypted_cols(e, scope: Scope) -> list:
    return [c for c in (scope.resolve(r) for r in ast.column_refs(e)) if not c.passthrough]


def _is_lit(e) -> bool:
    return isinstance(e, ast.LITERAL_TYPES)


# -- pass 1: capability analysis ---------------------------------------------

class _Analyzer:
    def __init__(self, scope: Scope):
        self.scope = scope
        self.reasons: list = []

    def note(self, reason: str):
        if reason not in self.reasons:
            self.reasons.append(reason)

    def need(self, col: ColumnInfo, cap: Capability, what: str):
        if not col.passthrough and not col.has(cap):
            self.note(f"{what} needs {cap.name} on {col.qualified} ({col.kind})")

    def compat(self, a: ColumnInfo, b: ColumnInfo, cap: Capability, what: str):
        if a.passthrough and b.passthrough:
            return
        if a.join_token != b.join_token:
            self.note(f"{what} between columns with different ciphers "
                      f"({a.qualified} {a.kind}, {b.qualified} {b.kind})")
        else:
            self.need(a, cap, what)

    def value(self, e):
        for n in ast.walk(e):
            if isinstance(n, ast.BinOp) and n.op in ast.ARITHMETIC:
                if _encrypted_cols(n, self.scope):
                    self.note("arithmetic over encrypted column")
            elif isinstance(n, ast.Aggregate) and n.arg is not None:
                enc = _encrypted_cols(n.arg, self.scope)
                if n.func in ("SUM", "AVG") and enc:
                    self.note(f"{n.func} requires homomorphic encryption")
                elif n.func in ("MIN", "MAX") and isinstance(n.arg, ast.ColumnRef):
                    self.need(self.scope.resolve(n.arg), ORD, n.func)

    def operand_pair(self, left, right, cap: Capability, what: str):
        lc, rc = _col_of(left, self.scope), _col_of(right, self.scope)
        if lc is not None and rc is not None:
            self.compat(lc, rc, cap, what)
            return
        col, other = (lc, right) if lc is not None else (rc, left)
        if col is None or col.passthrough:
            if col is None:
                # free on one side, maybe encrypted on the other via an expression
                return
            return
        self.need(col, cap, what)
        if not _is_lit(other) and not _encrypted_cols(other, self.scope):
            self.note(f"comparison of encrypted column {col.qualified} with a computed value")

    def predicate(self, e):
        if isinstance(e, ast.BinOp) and e.op in ast.LOGICAL:
            self.predicate(e.left)
            self.predicate(e.right)
        elif isinstance(e, ast.Not):
            self.predicate(e.operand)
        elif isinstance(e, ast.BinOp) and e.op in ast.COMPARISONS:
            self.value(e.left)
            self.value(e.right)
            self.operand_pair(e.left, e.right, EQ if e.op in ("=", "<>") else ORD, e.op)
        elif isinstance(e, ast.Between):
            self.value(e.expr)
            for b in (e.low, e.high):
                self.operand_pair(e.expr, b, ORD, "BETWEEN")
        elif isinstance(e, ast.InList):
            self.value(e.expr)
            col = _col_of(e.expr, self.scope)
            if col is not None:
                self.need(col, EQ, "IN")
        elif isinstance(e, ast.Like):
            self.value(e.expr)
            if isinstance(e.expr, ast.ColumnRef):
                self.need(self.scope.resolve(e.expr), LIKE, "LIKE")
            elif _encrypted_cols(e.expr, self.scope):
                self.note("LIKE over a computed encrypted value")
        else:
            self.value(e)

    def select(self, s: ast.Select):
        for j in s.joins:
            self.compat(self.scope.resolve(j.left), self.scope.resolve(j.right), EQ, "JOIN")
        for p in s.columns:
            if isinstance(p, ast.Projection):
                self.value(p.expr)
        if s.where is not None:
            self.predicate(s.where)
        for g in s.group_by:
            self.need(self.scope.resolve(g), EQ, "GROUP BY")
        if s.having is not None:
            self.predicate(s.having)
        for o in s.order_by:
            col = self.scope.lookup(o.column)
            if col is None:
                idx = self.scope.label_index(o.column)
                if idx is None:
                    self.scope.resolve(o.column)
                col = _col_of(s.columns[idx].expr, self.scope)
            if col is not None:
                self.need(col, ORD, "ORDER BY")

    def update(self, u: ast.Update):
        table = self.scope.bindings[0][2]
        for a in u.assignments:
            target = table.column(a.column)
            self.value(a.value)
            if _is_lit(a.value):
                continue
            src = _col_of(a.value, self.scope) if isinstance(a.value, ast.ColumnRef) else None
            if src is not None:
                if not (target.passthrough and src.passthrough) and \
                        target.join_token != src.join_token:
                    self.note(f"assignment between columns with different ciphers "
                              f"({target.qualified}, {src.qualified})")
            elif not target.passthrough:
                self.note(f"computed value assigned to encrypted column {target.qualified}")
        if u.where is not None:
            self.predicate(u.where)


def analyze(stmt, scope: Scope) -> list:
    """Reasons the statement cannot run on ciphertext; empty means it can."""
    a = _Analyzer(scope)
    if isinstance(stmt, ast.Select):
        a.select(stmt)
    elif isinstance(stmt, ast.Update):
        a.update(stmt)
    elif isinstance(stmt, ast.Delete) and stmt.where is not None:
        a.predicate(stmt.where)
    return a.reasons


# -- pass 2: literal binding ------------------------------------------------

class Bindings:
    def __init__(self):
        self.columns: dict = {}  # id(literal) -> ColumnInfo | None
        self.patterns: set = set()
        self.nodes: dict = {}  # id -> literal, keeps ids alive and unique

    def bind(self, lit, col: ColumnInfo | None, pattern: bool = False):
        self.nodes[id(lit)] = lit
        self.columns[id(lit)] = col
        if pattern:
            self.patterns.add(id(lit))

    def column(self, lit) -> ColumnInfo | None:
        return self.columns.get(id(lit))

    def is_pattern(self, lit) -> bool:
        return id(lit) in self.patterns

    def bound(self) -> list:
        return [(self.nodes[i], c) for i, c in self.columns.items() if c is not None]

    def __len__(self):
        return len(self.columns)


class _Binder:
    def __init__(self, scope: Scope):
        self.scope = scope
        self.b = Bindings()

    def lit(self, lit, partner, pattern=False):
        col = _col_of(partner, self.scope)
        if col is not None:
            self.b.bind(lit, None if col.passthrough else col, pattern)
            return
        if not _is_lit(partner) and _encrypted_cols(partner, self.scope):
            raise AmbiguousBinding(f"literal {render_lit(lit)} is compared with an expression over "
                                   f"encrypted column(s)")
        self.b.bind(lit, None, pattern)

    def nested(self, e, context):
        literals = [n for n in ast.walk(e) if _is_lit(n)]
        if not literals:
            return
        enc = {c.qualified for part in context for c in _encrypted_cols(part, self.scope)}
        if enc:
            lits = ", ".join(render_lit(n) for n in literals)
            raise AmbiguousBinding(f"literal(s) {lits} combined with encrypted column(s) "
                                   f"{', '.join(sorted(enc))} in one expression")
        for n in literals:
            self.b.bind(n, None)

    def side(self, e, other, context):
        if _is_lit(e):
            self.lit(e, other)
        else:
            self.nested(e, context)

    def predicate(self, e):
        if isinstance(e, ast.BinOp) and e.op in ast.LOGICAL:
            self.predicate(e.left)
            self.predicate(e.right)
        elif isinstance(e, ast.Not):
            self.predicate(e.operand)
        elif isinstance(e, ast.BinOp) and e.op in ast.COMPARISONS:
            self.side(e.left, e.right, (e.left, e.right))
            self.side(e.right, e.left, (e.left, e.right))
        elif isinstance(e, ast.Between):
            self.nested(e.expr, (e.expr,))
            for bound in (e.low, e.high):
                self.side(bound, e.expr, (e.expr, bound))
        elif isinstance(e, ast.InList):
            self.nested(e.expr, (e.expr,))
            for item in e.items:
                self.lit(item, e.expr)
        elif isinstance(e, ast.Like):
            self.nested(e.expr, (e.expr,))
            self.lit(e.pattern, e.expr, pattern=True)
        elif isinstance(e, ast.IsNull):
            self.nested(e.expr, (e.expr,))
        else:
            self.nested(e, (e,))

    def statement(self, s):
        if isinstance(s, ast.Select):
            for p in s.columns:
                if isinstance(p, ast.Projection):
                    self.nested(p.expr, (p.expr,))
            for clause in (s.where, s.having):
                if clause is not None:
                    self.predicate(clause)
        elif isinstance(s, ast.Insert):
            info = self.scope.bindings[0][2]
            names = s.columns if s.columns is not None else [c.name for c in info.columns]
            cols = [info.column(n) for n in names]
            for row in s.rows:
                if len(row) != len(cols):
                    raise SchemaError(f"{info.name} expects {len(cols)} values, got {len(row)}")
                for lit, col in zip(row, cols):
                    self.b.bind(lit, None if col.passthrough else col)
        elif isinstance(s, ast.Update):
            info = self.scope.bindings[0][2]
            for a in s.assignments:
                target = info.column(a.column)
                if _is_lit(a.value):
                    self.b.bind(a.value, None if target.passthrough else target)
                else:
                    ref = ast.ColumnRef(None, target.name)
                    self.nested(a.value, (a.value, ref) if not target.passthrough else (a.value,))
            if s.where is not None:
                self.predicate(s.where)
        elif isinstance(s, ast.Delete) and s.where is not None:
            self.predicate(s.where)
        return self.b


def render_lit(lit) -> str:
    from dice.sqlkit import render_literal
    return render_literal(lit)


def bind_literals(stmt, schema: SchemaMap) -> Bindings:
    """Tie every literal to the column whose cipher encrypts it (None = free)."""
    return _Binder(_scope_for(schema, stmt)).statement(stmt)


# -- pass 3: transformation ---------------------------------------------------

class _Encryptor(Visitor):
    def __init__(self, scope: Scope, schema: SchemaMap, bindings: Bindings, ops: OpLog):
        self.scope = scope
        self.schema = schema
        self.policy = schema.policy
        self.bindings = bindings
        self.ops = ops
        self.literals: list = []
        self.trace = ops.tracer is not None

    def ident(self, name: str, stored: str | None = None) -> str:
        ident = self.policy.identifier
        if ident.is_passthrough:
            return name
        t0 = time.perf_counter_ns() if self.trace else 0
        out = stored if stored is not None else self.policy.encrypt_identifier(name)
        micros = (time.perf_counter_ns() - t0) // 1000 if self.trace else 0
        self.ops.record("encrypt", ident.kind, "#ident", "#ident", name, out, micros,
                        sensitive=False)
        return out

    def table_name(self, name: str) -> str:
        info = self.schema.table(name)
        return self.ident(info.name, info.cipher_name)

    def alias(self, name: str) -> str:
        return self.ident(name)

    def _qualifier(self, q: str) -> str:
        spelling, ref, info = self.scope.binding(q)
        if ref.alias is None:
            return self.ident(info.name, info.cipher_name)
        return self.ident(spelling)

    def column_ref(self, ref: ast.ColumnRef) -> ast.ColumnRef:
        col = self.scope.lookup(ref)
        if col is None:
            idx = self.scope.label_index(ref)
            if idx is None:
                self.scope.resolve(ref)
            return ast.ColumnRef(None, self.ident(self.scope.labels[idx]))
        qual = self._qualifier(ref.table) if ref.table is not None else None
        return ast.ColumnRef(qual, self.ident(col.name, col.cipher_name))

    def column_name(self, table: str, name: str) -> str:
        col = self.schema.table(table).column(name)
        return self.ident(col.name, col.cipher_name)

    def label(self, name: str) -> str:
        return self.ident(name)

    def literal(self, lit):
        col = self.bindings.column(lit)
        if col is None or isinstance(lit, ast.NullLit):
            return lit
        t0 = time.perf_counter_ns() if self.trace else 0
        if self.bindings.is_pattern(lit):
            out = col.cipher.transform_pattern(lit.value, col.ctx)
        else:
            out = col.cipher.encrypt(lit.value, col.ctx)
        micros = (time.perf_counter_ns() - t0) // 1000 if self.trace else 0
        self.ops.record("encrypt", col.kind, col.table, col.name, lit.value, out, micros)
        self.literals.append((col, lit.value, out))
        return ast.IntLit(out) if isinstance(out, int) else ast.StrLit(out)


def output_plan(stmt: ast.Select, scope: Scope) -> list:
    out = []
    for p in stmt.columns:
        if isinstance(p, ast.Star):
            for _, _, info in scope.bindings:
                out.extend(OutputCol(c.name, None if c.passthrough else c) for c in info.columns)
            continue
        col = _col_of(p.expr, scope)
        out.append(OutputCol(p.label or default_label(p.expr),
                             None if col is None or col.passthrough else col))
    return out


def _same_ddl(a: ast.CreateTable, b: ast.CreateTable) -> bool:
    def norm(t):
        return [(c.name.upper(), c.type) for c in t.columns]
    return a.name.upper() == b.name.upper() and norm(a) == norm(b)


def rewrite_statement(policy, schema: SchemaMap, stmt, ops: OpLog | None = None):
    """Returns Rewritten, NeedsNaive or UnsupportedOutcome."""
    ops = ops if ops is not None else OpLog()
    if isinstance(stmt, (ast.Begin, ast.Commit, ast.Rollback)):
        return Rewritten(stmt, render(stmt))
    if isinstance(stmt, ast.CreateTable):
        if schema.has_table(stmt.name):
            # declared in the policy: the statement must agree with the declaration
            new_schema = schema
            if not _same_ddl(schema.table(stmt.name).plain_ddl(), stmt):
                raise SchemaError(f"CREATE TABLE {stmt.name} does not match the policy "
                                  f"declaration")
        else:
            new_schema = schema.with_table(stmt)
        info = new_schema.table(stmt.name)
        enc = _Encryptor(Scope(new_schema, []), new_schema, Bindings(), ops)
        enc.ident(info.name, info.cipher_name)
        for c in info.columns:
            enc.ident(c.name, c.cipher_name)
        ddl = info.cipher_ddl()
        return Rewritten(ddl, render(ddl), schema=new_schema)
    if isinstance(stmt, ast.DropTable):
        info = schema.table(stmt.name)
        enc = _Encryptor(Scope(schema, []), schema, Bindings(), ops)
        ddl = ast.DropTable(enc.ident(info.name, info.cipher_name))
        return Rewritten(ddl, render(ddl), schema=schema.without_table(stmt.name))

    scope = _scope_for(schema, stmt)
    reasons = analyze(stmt, scope)
    if reasons:
        return NeedsNaive(reasons[0], tuple(reasons))
    try:
        bindings = _Binder(scope).statement(stmt)
    except AmbiguousBinding as exc:
        return NeedsNaive(f"ambiguous literal binding: {exc}", (str(exc),))
    enc = _Encryptor(scope, schema, bindings, ops)
    out_stmt = transform(stmt, enc)
    outputs = output_plan(stmt, scope) if isinstance(stmt, ast.Select) else None
    return Rewritten(out_stmt, render(out_stmt), outputs, enc.literals)


# -- results --------------------------------------------------------------------

def decrypt_rows(outputs: list, rows, ops: OpLog | None = None) -> list:
    ops = ops if ops is not None else OpLog()
    plans = [(i, o.column) for i, o in enumerate(outputs) if o.column is not None]
    if not plans:
        return [tuple(r) for r in rows]
    cells = [list(r) for r in rows]
    # column by column, so ciphers with a batch path pay their setup once per result
    for i, col in plans:
        where = [k for k, r in enumerate(cells) if r[i] is not None]
        if not where:
            continue
        values = [cells[k][i] for k in where]
        t0 = time.perf_counter_ns()
        plain = col.cipher.decrypt_many(values, col.ctx)
        micros = (time.perf_counter_ns() - t0) // 1000 // len(values)
        for k, v, p in zip(where, values, plain):
            cells[k][i] = p
            ops.record("decrypt", col.kind, col.table, col.name, p, v, micros)
    return [tuple(r) for r in cells]


def decrypt_result(policy, schema: SchemaMap, stmt: ast.Select, rs, ops: OpLog | None = None):
    """Plaintext labels rebuilt from ``stmt``; values decrypted with their source column's cipher."""
    return decrypt_with_plan(output_plan(stmt, _scope_for(schema, stmt)), rs, ops)


def decrypt_with_plan(outputs: list, rs, ops: OpLog | None = None):
    from dice.backend.engine import ResultSet
    if len(rs.columns) != len(outputs):
        raise SchemaError(f"backend returned {len(rs.columns)} columns, expected {len(outputs)}")
    rows = decrypt_rows(outputs, rs.rows, ops)
    return ResultSet([o.label for o in outputs], rows, rs.rows_transferred, rs.affected)


def table_output_plan(info: TableInfo) -> list:
    return [OutputCol(c.name, None if c.passthrough else c) for c in info.columns]
