"""In-memory relational engine for the supported SQL subset.

The engine is cipher-agnostic: cells are Python ``int``, ``str`` or ``None``.
Identifiers match case-insensitively and are stored as first declared.

Concurrency: autocommit writes run one at a time under a database-wide lock.
Transactions are optimistic: they write to private copies of the tables they
touch, so readers only ever see committed state, and COMMIT merges each copy
into the current table by primary key under the same lock.  If another commit
changed one of the same keys first, COMMIT fails and the transaction is rolled
back (first committer wins).
"""
from __future__ import annotations

import operator
import re
import threading
from dataclasses import dataclass, field

from dice.errors import ExecError, TypeMismatch
from dice.sqlkit import ast, default_label, parse
from dice.sqlkit.parser import Parser

LOCK_TIMEOUT_S = 30.0
INT_BOUNDS = {"INT": (-(1 << 31), (1 << 31) - 1), "BIGINT": (-(1 << 63), (1 << 63) - 1)}


@dataclass
class ResultSet:
    columns: list
    rows: list
    rows_transferred: int = 0
    affected: int = 0

    def __post_init__(self):
        if not self.rows_transferred:
            self.rows_transferred = len(self.rows)


def parse_column_type(text: str) -> ast.ColumnType:
    p = Parser("X " + text)
    col = p.column_def()
    p.expect_eof()
    return col.type


class Table:
    def __init__(self, name: str, columns, rows=None):
        self.name = name
        self.columns = tuple(columns)
        self.index = {c.name.upper(): i for i, c in enumerate(self.columns)}
        self.pk_pos = next((i for i, c in enumerate(self.columns) if c.type.primary_key), None)
        self.rows: list = []
        self.pk: dict = {}
        self.version = 0  # bumped by every committed change
        self.dirty: set | None = None  # primary keys touched, on a transaction's working copy
        if rows:
            self.append([self.coerce_row(r) for r in rows])

    def clone(self) -> "Table":
        t = Table.__new__(Table)
        t.name, t.columns, t.index, t.pk_pos = self.name, self.columns, self.index, self.pk_pos
        t.rows = list(self.rows)
        t.pk = dict(self.pk)
        t.version = self.version
        t.dirty = None
        return t

    def visible(self) -> list:
        rows = self.rows
        return rows[:len(rows)]

    def coerce(self, col: ast.ColumnDef, v):
        if v is None:
            if col.type.primary_key:
                raise ExecError(f"primary key {self.name}.{col.name} cannot be NULL")
            return None
        if col.type.is_text:
            if not isinstance(v, str):
                raise TypeMismatch(f"{self.name}.{col.name} expects text, got {v!r}")
            if len(v) > col.type.length:
                raise ExecError(f"value too long for {self.name}.{col.name} "
                                f"({len(v)} > {col.type.length})")
            return v
        if not isinstance(v, int) or isinstance(v, bool):
            raise TypeMismatch(f"{self.name}.{col.name} expects an integer, got {v!r}")
        lo, hi = INT_BOUNDS[col.type.base]
        if not lo <= v <= hi:
            raise ExecError(f"{v} out of range for {col.type.base} column {self.name}.{col.name}")
        return v

    def coerce_row(self, row) -> tuple:
        if len(row) != len(self.columns):
            raise ExecError(f"{self.name} has {len(self.columns)} columns, got {len(row)} values")
        return tuple(self.coerce(c, v) for c, v in zip(self.columns, row))

    def append(self, rows: list):
        if self.pk_pos is not None:
            seen = set()
            for r in rows:
                key = r[self.pk_pos]
                if key in self.pk or key in seen:
                    raise ExecError(f"duplicate primary key {key!r} in {self.name}")
                seen.add(key)
            n = len(self.rows)
            for i, r in enumerate(rows):
                self.pk[r[self.pk_pos]] = n + i
        self.rows.extend(rows)

    def replace_rows(self, rows: list):
        pk = {}
        if self.pk_pos is not None:
            for i, r in enumerate(rows):
                key = r[self.pk_pos]
                if key in pk:
                    raise ExecError(f"duplicate primary key {key!r} in {self.name}")
                pk[key] = i
        self.rows, self.pk = rows, pk

    def to_doc(self) -> dict:
        return {"name": self.name,
                "columns": [{"name": c.name, "type": c.type.sql()} for c in self.columns],
                "rows": [list(r) for r in self.visible()]}


class Database:
    def __init__(self):
        self.tables: dict = {}
        self._writer = threading.Lock()

    def session(self) -> "EngineSession":
        return EngineSession(self)

    def execute(self, sql_or_stmt) -> ResultSet:
        """Autocommit execution on a throwaway session."""
        return self.session().execute(sql_or_stmt)

    def table(self, name: str) -> Table:
        t = self.tables.get(name.upper())
        if t is None:
            raise ExecError(f"unknown table {name}")
        return t

    # -- snapshots -------------------------------------------------------

    def to_doc(self) -> dict:
        return {"format": "dice-snapshot-v1",
                "tables": [t.to_doc() for t in list(self.tables.values())]}

    @classmethod
    def from_doc(cls, doc: dict) -> "Database":
        db = cls()
        try:
            for td in doc["tables"]:
                cols = [ast.ColumnDef(c["name"], parse_column_type(c["type"])) for c in td["columns"]]
                t = Table(td["name"], cols, [tuple(r) for r in td.get("rows", ())])
                if t.name.upper() in db.tables:
                    raise ExecError(f"duplicate table {t.name} in snapshot")
                db.tables[t.name.upper()] = t
        except (KeyError, TypeError) as exc:
            raise ExecError(f"malformed snapshot: {exc}") from exc
        return db


# -- expression compilation -------------------------------------------------

_CMP = {"=": operator.eq, "<>": operator.ne, "<": operator.lt, ">": operator.gt,
        "<=": operator.le, ">=": operator.ge}


def _compare(op, a, b):
    if a is None or b is None:
        return None
    if type(a) is not type(b):
        raise TypeMismatch(f"cannot compare {a!r} with {b!r}")
    return _CMP[op](a, b)


def _arith(op, a, b):
    if a is None or b is None:
        return None
    if type(a) is not int or type(b) is not int:
        raise TypeMismatch(f"arithmetic needs integers, got {a!r} {op} {b!r}")
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        raise ExecError("division by zero")
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _truth(v):
    if v is None or isinstance(v, bool):
        return v
    raise TypeMismatch(f"expected a boolean condition, got {v!r}")


def _and(a, b):
    a, b = _truth(a), _truth(b)
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _or(a, b):
    a, b = _truth(a), _truth(b)
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _not(a):
    a = _truth(a)
    return None if a is None else not a


def like_regex(pattern: str):
    parts = []
    for ch in pattern:
        parts.append(".*" if ch == "%" else "." if ch == "_" else re.escape(ch))
    return re.compile("".join(parts), re.DOTALL)


def _like(rx, v, negated):
    if v is None:
        return None
    if not isinstance(v, str):
        raise TypeMismatch(f"LIKE needs text, got {v!r}")
    hit = rx.fullmatch(v) is not None
    return hit != negated


def _in(v, items, has_null, negated):
    if v is None:
        return None
    for it in items:
        if it is not None and type(it) is not type(v):
            raise TypeMismatch(f"cannot compare {v!r} with {it!r}")
    if v in items:
        return not negated
    if has_null:
        return None
    return negated


def _aggregate(func, values):
    if func == "COUNT":
        return sum(1 for v in values if v is not None)
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    if func in ("SUM", "AVG"):
        if any(type(v) is not int for v in vals):
            raise TypeMismatch(f"{func} needs integers")
        s = sum(vals)
        if func == "SUM":
            return s
        q = abs(s) // len(vals)
        return q if s >= 0 else -q
    if len({type(v) for v in vals}) > 1:
        raise TypeMismatch(f"{func} over mixed types")
    return min(vals) if func == "MIN" else max(vals)


class Scope:
    """Column resolution over a left-deep join: bindings laid out left to right."""

    def __init__(self):
        self.bindings: list = []  # (binding upper, Table, offset)
        self.width = 0

    def add(self, binding: str, table: Table):
        key = binding.upper()
        if any(b == key for b, _, _ in self.bindings):
            raise ExecError(f"duplicate table binding {binding}")
        self.bindings.append((key, table, self.width))
        self.width += len(table.columns)

    def lookup(self, ref: ast.ColumnRef):
        """Return (position, binding) or None when the column is unknown."""
        name = ref.name.upper()
        if ref.table is not None:
            key = ref.table.upper()
            for b, t, off in self.bindings:
                if b == key:
                    i = t.index.get(name)
                    return None if i is None else (off + i, b)
            raise ExecError(f"unknown table or alias {ref.table}")
        hits = [(off + t.index[name], b) for b, t, off in self.bindings if name in t.index]
        if len(hits) > 1:
            raise ExecError(f"ambiguous column {ref.name}")
        return hits[0] if hits else None

    def column_at(self, pos: int) -> ast.ColumnDef:
        for _, t, off in self.bindings:
            if off <= pos < off + len(t.columns):
                return t.columns[pos - off]
        raise IndexError(pos)

    def resolve(self, ref: ast.ColumnRef) -> int:
        hit = self.lookup(ref)
        if hit is None:
            raise ExecError(f"unknown column {_ref_text(ref)}")
        return hit[0]


def _ref_text(ref):
    return f"{ref.table}.{ref.name}" if ref.table else ref.name


def compile_scalar(e, scope: Scope):
    """Compile ``e`` to a function of one combined row."""
    if isinstance(e, ast.ColumnRef):
        i = scope.resolve(e)
        return lambda row: row[i]
    if isinstance(e, ast.IntLit) or isinstance(e, ast.StrLit):
        v = e.value
        return lambda row: v
    if isinstance(e, ast.NullLit):
        return lambda row: None
    if isinstance(e, ast.Aggregate):
        raise ExecError(f"aggregate {e.func} not allowed here")
    return _compile_composite(e, lambda sub: compile_scalar(sub, scope))


def compile_group(e, scope: Scope):
    """Compile ``e`` to a function of a group (list of rows)."""
    if isinstance(e, ast.Aggregate):
        func = e.func
        if e.arg is None:
            return len
        arg = compile_scalar(e.arg, scope)
        return lambda rows: _aggregate(func, [arg(r) for r in rows])
    if isinstance(e, ast.ColumnRef):
        i = scope.resolve(e)
        return lambda rows: rows[0][i] if rows else None
    if isinstance(e, ast.LITERAL_TYPES):
        f = compile_scalar(e, scope)
        return lambda rows: f(None)
    return _compile_composite(e, lambda sub: compile_group(sub, scope))


def _compile_composite(e, sub):
    if isinstance(e, ast.BinOp):
        left, right, op = sub(e.left), sub(e.right), e.op
        if op == "AND":
            return lambda x: _and(left(x), right(x))
        if op == "OR":
            return lambda x: _or(left(x), right(x))
        if op in _CMP:
            return lambda x: _compare(op, left(x), right(x))
        return lambda x: _arith(op, left(x), right(x))
    if isinstance(e, ast.Not):
        f = sub(e.operand)
        return lambda x: _not(f(x))
    if isinstance(e, ast.Between):
        v, lo, hi, neg = sub(e.expr), sub(e.low), sub(e.high), e.negated

        def between(x):
            val = v(x)
            r = _and(_compare(">=", val, lo(x)), _compare("<=", val, hi(x)))
            return _not(r) if neg else r
        return between
    if isinstance(e, ast.Like):
        v, rx, neg = sub(e.expr), like_regex(e.pattern.value), e.negated
        return lambda x: _like(rx, v(x), neg)
    if isinstance(e, ast.InList):
        v, neg = sub(e.expr), e.negated
        items = [None if isinstance(i, ast.NullLit) else i.value for i in e.items]
        has_null = any(i is None for i in items)
        items = [i for i in items if i is not None]
        return lambda x: _in(v(x), items, has_null, neg)
    if isinstance(e, ast.IsNull):
        v, neg = sub(e.expr), e.negated
        return lambda x: (v(x) is not None) if neg else (v(x) is None)
    raise ExecError(f"unsupported expression {e!r}")


def conjuncts(e) -> list:
    if isinstance(e, ast.BinOp) and e.op == "AND":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def _sort_key(v):
    return (0, 0) if v is None else (1, v)


def sort_rows(items: list, keys: list) -> list:
    """Stable multi-key sort; ``keys`` is [(index into item key tuple, desc)]; NULLs first."""
    for idx, desc in reversed(keys):
        items.sort(key=lambda it: _sort_key(it[0][idx]), reverse=desc)
    return items


# -- sessions ---------------------------------------------------------------

def _merge_plan(current: Table, base_rows: list, base_pk: dict, work: Table):
    """Key-level changes of ``work`` against ``current``, as (changed, deleted, inserted).

    Only the keys ``work`` touched are examined.  Raises when one of them was
    also changed by a commit since the transaction first wrote the table.
    """
    name = current.name
    pos = current.pk_pos
    if pos is None:
        raise ExecError(f"serialization failure: {name} changed concurrently and has no "
                        f"primary key to merge on; transaction rolled back")
    changed, deleted, inserted = {}, set(), []
    rows = current.rows
    for k in work.dirty:
        b = base_rows[base_pk[k]] if k in base_pk else None
        i = work.pk.get(k)
        n = work.rows[i] if i is not None else None
        if b == n:
            continue
        if b is not None:
            j = current.pk.get(k)
            if j is None or rows[j] != b:
                raise ExecError(f"serialization failure: row {k!r} of {name} changed "
                                f"concurrently; transaction rolled back")
        elif k in current.pk:
            raise ExecError(f"serialization failure: duplicate primary key {k!r} in {name} "
                            f"(inserted concurrently); transaction rolled back")
        if n is None:
            deleted.add(k)
        elif b is None:
            inserted.append((i, n))
        else:
            changed[k] = n
    inserted.sort(key=lambda t: t[0])  # keep the transaction's insertion order
    return changed, deleted, [n for _, n in inserted]


def _apply_plan(current: Table, plan):
    changed, deleted, inserted = plan
    pos = current.pk_pos
    if deleted:
        current.replace_rows([changed.get(r[pos], r) for r in current.rows
                              if r[pos] not in deleted] + inserted)
        return
    for k, n in changed.items():
        current.rows[current.pk[k]] = n
    current.append(inserted)


@dataclass
class EngineSession:
    db: Database
    in_txn: bool = False
    working: dict = field(default_factory=dict)
    bases: dict = field(default_factory=dict)  # table key -> (version, rows, pk) at first write

    def execute(self, sql_or_stmt) -> ResultSet:
        stmt = parse(sql_or_stmt) if isinstance(sql_or_stmt, str) else sql_or_stmt
        if isinstance(stmt, ast.Select):
            return self._select(stmt)
        if isinstance(stmt, ast.Begin):
            if self.in_txn:
                raise ExecError("transaction already open")
            self.in_txn = True
            return ResultSet([], [])
        if isinstance(stmt, ast.Commit):
            self._end(commit=True)
            return ResultSet([], [])
        if isinstance(stmt, ast.Rollback):
            self._end(commit=False)
            return ResultSet([], [])
        if isinstance(stmt, (ast.CreateTable, ast.DropTable)):
            return self._ddl(stmt)
        return self._dml(stmt)

    def close(self):
        if self.in_txn:
            self._end(commit=False)

    # -- transactions ----------------------------------------------------

    def _acquire(self):
        if not self.db._writer.acquire(timeout=LOCK_TIMEOUT_S):
            raise ExecError("timed out waiting for the write lock")

    def _end(self, commit: bool):
        if not self.in_txn:
            raise ExecError("no transaction is open")
        working, bases = self.working, self.bases
        self.working, self.bases, self.in_txn = {}, {}, False
        if not commit or not working:
            return
        self._acquire()
        try:
            plan = []
            for key, table in working.items():
                current = self.db.tables.get(key)
                version, base_rows, base_pk = bases[key]
                if current is None:
                    raise ExecError(f"serialization failure: table {table.name} was dropped; "
                                    f"transaction rolled back")
                if current.version == version:
                    plan.append((key, table, None))
                else:
                    plan.append((key, current, _merge_plan(current, base_rows, base_pk, table)))
            for key, table, changes in plan:
                if changes is None:
                    table.dirty = None
                    table.version += 1
                    self.db.tables[key] = table
                else:
                    _apply_plan(table, changes)
                    table.version += 1
        finally:
            self.db._writer.release()

    def _read_table(self, name: str) -> Table:
        t = self.working.get(name.upper())
        return t if t is not None else self.db.table(name)

    def _dml(self, stmt) -> ResultSet:
        name = stmt.table if isinstance(stmt, ast.Insert) else stmt.table.name
        if self.in_txn:
            key = name.upper()
            if key not in self.working:
                self._acquire()
                try:
                    copy = self.db.table(name).clone()
                finally:
                    self.db._writer.release()
                copy.dirty = set()
                self.working[key] = copy
                self.bases[key] = (copy.version, list(copy.rows), dict(copy.pk))
            return ResultSet([], [], affected=self._apply(stmt, self.working[key]))
        self._acquire()
        try:
            table = self.db.table(name)
            n = self._apply(stmt, table)
            table.version += 1
            return ResultSet([], [], affected=n)
        finally:
            self.db._writer.release()

    def _ddl(self, stmt) -> ResultSet:
        if self.in_txn:
            raise ExecError("DDL is not allowed inside a transaction")
        self._acquire()
        try:
            key = stmt.name.upper()
            if isinstance(stmt, ast.CreateTable):
                if key in self.db.tables:
                    raise ExecError(f"table {stmt.name} already exists")
                self.db.tables[key] = Table(stmt.name, stmt.columns)
            else:
                if key not in self.db.tables:
                    raise ExecError(f"unknown table {stmt.name}")
                del self.db.tables[key]
        finally:
            self.db._writer.release()
        return ResultSet([], [])

    # -- DML -------------------------------------------------------------

    def _apply(self, stmt, table: Table) -> int:
        if isinstance(stmt, ast.Insert):
            if stmt.columns is None:
                positions = list(range(len(table.columns)))
            else:
                positions = []
                for c in stmt.columns:
                    i = table.index.get(c.upper())
                    if i is None:
                        raise ExecError(f"unknown column {c} in {table.name}")
                    if i in positions:
                        raise ExecError(f"column {c} listed twice")
                    positions.append(i)
            new = []
            for r in stmt.rows:
                if len(r) != len(positions):
                    raise ExecError("VALUES row has the wrong number of items")
                cells = [None] * len(table.columns)
                for i, lit in zip(positions, r):
                    cells[i] = None if isinstance(lit, ast.NullLit) else lit.value
                new.append(table.coerce_row(cells))
            table.append(new)
            if table.dirty is not None and table.pk_pos is not None:
                table.dirty.update(r[table.pk_pos] for r in new)
            return len(new)

        scope = Scope()
        scope.add(stmt.table.binding, table)
        pred = compile_scalar(stmt.where, scope) if stmt.where is not None else None
        rows = table.visible()
        if isinstance(stmt, ast.Delete):
            kept = [r for r in rows if pred is not None and pred(r) is not True]
            if table.dirty is not None and table.pk_pos is not None and len(kept) < len(rows):
                keep = {id(r) for r in kept}
                table.dirty.update(r[table.pk_pos] for r in rows if id(r) not in keep)
            table.replace_rows(kept)
            return len(rows) - len(kept)

        sets = []
        for a in stmt.assignments:
            i = table.index.get(a.column.upper())
            if i is None:
                raise ExecError(f"unknown column {a.column} in {table.name}")
            sets.append((i, compile_scalar(a.value, scope)))
        out, n = [], 0
        for r in rows:
            if pred is None or pred(r) is True:
                cells = list(r)
                for i, f in sets:
                    cells[i] = f(r)
                new = table.coerce_row(cells)
                out.append(new)
                n += 1
                if table.dirty is not None and table.pk_pos is not None:
                    table.dirty.add(r[table.pk_pos])
                    table.dirty.add(new[table.pk_pos])
            else:
                out.append(r)
        table.replace_rows(out)
        return n

    # -- SELECT ----------------------------------------------------------

    def _select(self, s: ast.Select) -> ResultSet:
        scope = Scope()
        tables = []
        for ref in s.tables:
            t = self._read_table(ref.name)
            scope.add(ref.binding, t)
            tables.append(t)

        # push single-table conjuncts down to their table
        local = {b: [] for b, _, _ in scope.bindings}
        residual = []
        if s.where is not None:
            if ast.contains_aggregate(s.where):
                raise ExecError("aggregates are not allowed in WHERE")
            for c in conjuncts(s.where):
                owners = set()
                for ref in ast.column_refs(c):
                    hit = scope.lookup(ref)
                    if hit is None:
                        raise ExecError(f"unknown column {_ref_text(ref)}")
                    owners.add(hit[1])
                if len(owners) == 1:
                    local[owners.pop()].append(c)
                else:
                    residual.append(c)

        def filtered(k):
            b, t, _ = scope.bindings[k]
            rows = t.visible()
            if local[b]:
                sub = Scope()
                sub.add(b, t)
                preds = [compile_scalar(c, sub) for c in local[b]]
                rows = [r for r in rows if all(p(r) is True for p in preds)]
            return rows

        rows = filtered(0)
        for k, j in enumerate(s.joins, start=1):
            b, t, off = scope.bindings[k]
            lpos, rpos = scope.resolve(j.left), scope.resolve(j.right)
            if lpos >= off and rpos < off:
                lpos, rpos = rpos, lpos
            if not (lpos < off <= rpos < off + len(t.columns)):
                raise ExecError("JOIN condition must relate the joined table to an earlier one")
            if scope.column_at(lpos).type.is_text != scope.column_at(rpos).type.is_text:
                raise TypeMismatch(f"JOIN compares text with integer: {_ref_text(j.left)} = "
                                   f"{_ref_text(j.right)}")
            right = filtered(k)
            rpos -= off
            buckets: dict = {}
            for r in right:
                key = r[rpos]
                if key is not None:
                    buckets.setdefault(key, []).append(r)
            joined = []
            for left in rows:
                key = left[lpos]
                if key is None:
                    continue
                for r in buckets.get(key, ()):
                    joined.append(left + r)
            rows = joined
        if residual:
            preds = [compile_scalar(c, scope) for c in residual]
            rows = [r for r in rows if all(p(r) is True for p in preds)]

        if s.is_star:
            labels = [c.name for _, t, _ in scope.bindings for c in t.columns]
            exprs = None
        else:
            labels = [p.label or default_label(p.expr) for p in s.columns]
            exprs = [p.expr for p in s.columns]

        grouped = bool(s.group_by) or s.having is not None or (
            exprs is not None and any(ast.contains_aggregate(e) for e in exprs))
        order = self._order_plan(s, scope, labels)

        if grouped:
            if exprs is None:
                proj = [lambda g, i=i: g[0][i] if g else None for i in range(scope.width)]
            else:
                proj = [compile_group(e, scope) for e in exprs]
            key_pos = [scope.resolve(c) for c in s.group_by]
            groups: dict = {}
            if key_pos:
                for r in rows:
                    groups.setdefault(tuple(r[i] for i in key_pos), []).append(r)
            else:
                groups[()] = rows
            having = compile_group(s.having, scope) if s.having is not None else None
            sort_fns = [compile_group(ref, scope) if kind == "src" else None
                        for kind, ref in order]
            items = []
            for g in groups.values():
                if having is not None and _truth(having(g)) is not True:
                    continue
                out = tuple(f(g) for f in proj)
                items.append((self._keys(order, sort_fns, g, out), out))
        else:
            if exprs is None:
                proj = None
            else:
                proj = [compile_scalar(e, scope) for e in exprs]
            sort_fns = [compile_scalar(ref, scope) if kind == "src" else None
                        for kind, ref in order]
            items = []
            for r in rows:
                out = r if proj is None else tuple(f(r) for f in proj)
                items.append((self._keys(order, sort_fns, r, out), out))

        if order:
            sort_rows(items, [(i, o.descending) for i, o in enumerate(s.order_by)])
        result = [out for _, out in items]
        if s.distinct:
            result = list(dict.fromkeys(result))
        if s.limit is not None:
            result = result[:s.limit]
        return ResultSet(labels, result)

    @staticmethod
    def _order_plan(s, scope, labels):
        plan = []
        upper = [lab.upper() for lab in labels]
        for o in s.order_by:
            ref = o.column
            if scope.lookup(ref) is not None:
                plan.append(("src", ref))
            elif ref.table is None and ref.name.upper() in upper:
                plan.append(("label", upper.index(ref.name.upper())))
            else:
                raise ExecError(f"unknown ORDER BY column {_ref_text(ref)}")
        return plan

    @staticmethod
    def _keys(plan, fns, src, out):
        return tuple(fns[i](src) if kind == "src" else out[arg]
                     for i, (kind, arg) in enumerate(plan))


def execute(db: Database, stmt, session: EngineSession | None = None) -> ResultSet:
    """Run one statement; ``session`` carries transaction state between calls."""
    return (session or db.session()).execute(stmt)


mem_execute = execute

__all__ = ["Database", "EngineSession", "ResultSet", "Table", "execute", "mem_execute",
           "parse_column_type", "like_regex"]
