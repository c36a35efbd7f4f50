"""Client-side evaluation: fetch whole tables, decrypt, run the statement locally.

Reads issue no predicates at all.  Writes are computed locally and shipped
back as plaintext statements that go through the normal rewriter, so every
value is encrypted with its column's cipher.
"""
from __future__ import annotations

from dice.backend.engine import Database, ResultSet, Table
from dice.errors import Unsupported
from dice.rewrite import Rewritten, Scope, decrypt_rows, rewrite_statement
from dice.sqlkit import ast

WRITE_CHUNK = 200


def _lit(v):
    if v is None:
        return ast.NullLit()
    return ast.IntLit(v) if isinstance(v, int) else ast.StrLit(v)


class NaiveRun:
    """State for one naive statement: ciphertext SQL issued and rows fetched."""

    def __init__(self, session, ops):
        self.session = session
        self.ops = ops
        self.sql: list = []
        self.rows_transferred = 0

    def _send(self, plain_stmt):
        s = self.session
        out = rewrite_statement(s.policy, s.schema, plain_stmt, self.ops)
        if not isinstance(out, Rewritten):
            raise Unsupported(f"internal statement cannot be rewritten: {out.reason}")
        self.sql.append(out.sql)
        return out, s.connector.execute(out.sql)

    def fetch(self, info, columns) -> Table:
        q = ast.Select(tuple(ast.Projection(ast.ColumnRef(None, c.name)) for c in columns),
                       ast.TableRef(info.name))
        out, rs = self._send(q)
        self.rows_transferred += rs.rows_transferred
        rows = decrypt_rows(out.outputs, rs.rows, self.ops)
        defs = [ast.ColumnDef(c.name, c.plain_type) for c in columns]
        return Table(info.name, defs, rows)

    def execute(self, stmt) -> ResultSet:
        if isinstance(stmt, ast.Select):
            return self.select(stmt)
        if isinstance(stmt, (ast.Update, ast.Delete)):
            return self.write(stmt)
        raise Unsupported(f"{type(stmt).__name__} cannot be evaluated naively")

    # -- reads -------------------------------------------------------------

    def select(self, stmt: ast.Select) -> ResultSet:
        schema = self.session.schema
        scope = Scope(schema, stmt.tables)
        needed: dict = {}
        for ref in stmt.tables:
            needed.setdefault(ref.name.upper(), set())
        for ref in ast.column_refs(stmt):
            col = scope.lookup(ref)
            if col is not None:
                needed[col.table.upper()].add(col.name.upper())
        local = Database()
        for tname, cols in needed.items():
            info = schema.table(tname)
            if stmt.is_star:
                chosen = list(info.columns)
            else:
                chosen = [c for c in info.columns if c.name.upper() in cols] or [info.columns[0]]
            local.tables[tname] = self.fetch(info, chosen)
        rs = local.execute(stmt)
        return ResultSet(rs.columns, rs.rows, self.rows_transferred, rs.affected)

    # -- writes ------------------------------------------------------------

    def write(self, stmt) -> ResultSet:
        s = self.session
        info = s.schema.table(stmt.table.name)
        local = Database()
        table = self.fetch(info, list(info.columns))
        local.tables[info.name.upper()] = table
        before = list(table.rows)
        rs = local.execute(stmt)
        after = list(local.table(info.name).rows)
        plan = self._write_plan(info, before, after)
        if plan:
            own_txn = not s.in_transaction and len(plan) > 1
            if own_txn:
                self._send(ast.Begin())
            try:
                for w in plan:
                    self._send(w)
            except Exception:
                if own_txn:
                    s.connector.execute("ROLLBACK")
                raise
            if own_txn:
                self._send(ast.Commit())
        return ResultSet([], [], self.rows_transferred, rs.affected)

    def _write_plan(self, info, before, after) -> list:
        names = [c.name for c in info.columns]
        pk = info.primary_key
        ref = ast.TableRef(info.name)
        if pk is not None:
            i = names.index(pk.name)
            old_keys = [r[i] for r in before]
            if len(before) == len(after) and old_keys == [r[i] for r in after]:
                out = []
                for old, new in zip(before, after):
                    if old == new:
                        continue
                    sets = tuple(ast.Assignment(n, _lit(v))
                                 for n, a, v in zip(names, old, new) if a != v)
                    out.append(ast.Update(ref, sets, ast.BinOp(
                        "=", ast.ColumnRef(None, pk.name), _lit(old[i]))))
                return out
            kept = {r[i] for r in after}
            removed = [k for k in old_keys if k not in kept]
            if len(before) - len(removed) == len(after) and \
                    [r for r in before if r[i] in kept] == after:
                return [ast.Delete(ref, ast.InList(ast.ColumnRef(None, pk.name),
                                                   tuple(_lit(k) for k in removed[j:j + WRITE_CHUNK])))
                        for j in range(0, len(removed), WRITE_CHUNK)]
        if before == after:
            return []
        # no usable key: replace the whole table contents
        out = [ast.Delete(ref)]
        cols = tuple(names)
        for j in range(0, len(after), WRITE_CHUNK):
            rows = tuple(tuple(_lit(v) for v in r) for r in after[j:j + WRITE_CHUNK])
            out.append(ast.Insert(info.name, cols, rows))
        return out


