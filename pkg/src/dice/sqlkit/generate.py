"""Grammar-directed random statements for round-trip and engine tests.

``random_statement`` only cares about syntax.  ``random_query`` takes a schema
and produces type-correct SELECTs that an engine can actually run.
"""
from __future__ import annotations

import random
import string

from . import ast
from .lexer import KEYWORDS

_NAMES = ("a", "b", "c", "T", "t1", "Col_2", "x_y", "NAME", "Qty", "_z", "ORDERS", "C")
_STR_CHARS = string.ascii_letters + string.digits + " '%_-"


def _ident(rng: random.Random) -> str:
    if rng.random() < 0.7:
        return rng.choice(_NAMES)
    while True:
        first = rng.choice(string.ascii_letters + "_")
        rest = "".join(rng.choice(string.ascii_letters + string.digits + "_")
                       for _ in range(rng.randint(0, 6)))
        name = first + rest
        if name.upper() not in KEYWORDS:
            return name


def _literal(rng, kinds=("int", "str", "null")):
    kind = rng.choice(kinds)
    if kind == "int":
        return ast.IntLit(rng.randint(-1000, 10**6))
    if kind == "str":
        return ast.StrLit("".join(rng.choice(_STR_CHARS) for _ in range(rng.randint(0, 8))))
    return ast.NullLit()


class _Syntax:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def colref(self):
        r = self.rng
        return ast.ColumnRef(_ident(r) if r.random() < 0.5 else None, _ident(r))

    def operand(self, depth, aggregates):
        r = self.rng
        roll = r.random()
        if depth <= 0 or roll < 0.35:
            return self.colref() if r.random() < 0.6 else _literal(r, ("int", "str"))
        if aggregates and roll < 0.5:
            func = r.choice(ast.AGGREGATES)
            arg = None if func == "COUNT" and r.random() < 0.4 else self.operand(depth - 1, False)
            return ast.Aggregate(func, arg)
        return ast.BinOp(r.choice(ast.ARITHMETIC), self.operand(depth - 1, aggregates),
                         self.operand(depth - 1, aggregates))

    def bound(self):
        return self.colref() if self.rng.random() < 0.3 else _literal(self.rng, ("int", "str"))

    def predicate(self, depth, aggregates=False):
        r = self.rng
        roll = r.random()
        if depth > 0 and roll < 0.3:
            op = r.choice(ast.LOGICAL)
            return ast.BinOp(op, self.predicate(depth - 1, aggregates),
                             self.predicate(depth - 1, aggregates))
        if depth > 0 and roll < 0.38:
            return ast.Not(self.predicate(depth - 1, aggregates))
        left = self.operand(depth - 1, aggregates)
        kind = r.randrange(6)
        if kind == 0:
            return ast.Between(left, self.bound(), self.bound(), r.random() < 0.3)
        if kind == 1:
            return ast.Like(left, _literal(r, ("str",)), r.random() < 0.3)
        if kind == 2:
            items = tuple(_literal(r) for _ in range(r.randint(1, 4)))
            return ast.InList(left, items, r.random() < 0.3)
        if kind == 3:
            return ast.IsNull(left, r.random() < 0.5)
        return ast.BinOp(r.choice(ast.COMPARISONS), left, self.operand(depth - 1, aggregates))

    def table_ref(self):
        r = self.rng
        return ast.TableRef(_ident(r), _ident(r) if r.random() < 0.6 else None)

    def select(self):
        r = self.rng
        if r.random() < 0.2:
            columns = (ast.Star(),)
        else:
            columns = tuple(
                ast.Projection(self.operand(2, True), _ident(r) if r.random() < 0.3 else None)
                for _ in range(r.randint(1, 4)))
        joins = tuple(ast.Join(self.table_ref(), self.colref(), self.colref())
                      for _ in range(r.choice((0, 0, 1, 2))))
        where = self.predicate(3) if r.random() < 0.7 else None
        group_by = tuple(self.colref() for _ in range(r.randint(1, 2))) if r.random() < 0.3 else ()
        has_agg = any(isinstance(c, ast.Projection) and ast.contains_aggregate(c.expr)
                      for c in columns)
        having = None
        if (group_by or has_agg) and r.random() < 0.5:
            having = self.predicate(2, aggregates=True)
        order_by = tuple(ast.OrderItem(self.colref(), r.random() < 0.5)
                         for _ in range(r.choice((0, 0, 1, 2))))
        limit = r.randint(0, 100) if r.random() < 0.3 else None
        return ast.Select(columns, self.table_ref(), joins, where, group_by, having, order_by,
                          limit, r.random() < 0.2)

    def column_type(self):
        r = self.rng
        base = r.choice(("INT", "BIGINT", "VARCHAR", "CHAR"))
        length = r.randint(1, 64) if base in ("VARCHAR", "CHAR") else None
        return ast.ColumnType(base, length, False)

    def statement(self):
        r = self.rng
        kind = r.choices(("select", "insert", "update", "delete", "create", "drop", "txn"),
                         weights=(10, 3, 3, 2, 2, 1, 1))[0]
        if kind == "select":
            return self.select()
        if kind == "insert":
            width = r.randint(1, 4)
            cols = None
            if r.random() < 0.6:
                cols = tuple(dict.fromkeys(_ident(r) for _ in range(width)))
                width = len(cols)
            rows = tuple(tuple(_literal(r) for _ in range(width)) for _ in range(r.randint(1, 3)))
            return ast.Insert(_ident(r), cols, rows)
        if kind == "update":
            assigns = tuple(ast.Assignment(_ident(r), self.operand(2, False))
                            for _ in range(r.randint(1, 3)))
            return ast.Update(self.table_ref(), assigns, self.predicate(2) if r.random() < 0.7 else None)
        if kind == "delete":
            return ast.Delete(self.table_ref(), self.predicate(2) if r.random() < 0.7 else None)
        if kind == "create":
            # column names are case-insensitive, so dedupe on the upper-cased form
            names = list({n.upper(): n for n in (_ident(r) for _ in range(r.randint(1, 5)))}.values())
            cols = [ast.ColumnDef(n, self.column_type()) for n in names]
            if r.random() < 0.5:
                c = cols[0]
                cols[0] = ast.ColumnDef(c.name, ast.ColumnType(c.type.base, c.type.length, True))
            return ast.CreateTable(_ident(r), tuple(cols))
        if kind == "drop":
            return ast.DropTable(_ident(r))
        return r.choice((ast.Begin(), ast.Commit(), ast.Rollback()))


def random_statement(rng: random.Random) -> ast.Statement:
    return _Syntax(rng).statement()


# -- schema-aware queries -----------------------------------------------------

class _Typed:
    """Builds SELECTs over ``schema``: {table: [(column, "int"|"text"), ...]}.

    Integers stay non-negative and strings stay within ``alphabet`` so the
    queries remain inside every cipher's domain.
    """

    def __init__(self, rng, schema, alphabet, int_max):
        self.rng = rng
        self.schema = schema
        self.alphabet = alphabet
        self.int_max = int_max

    def lit(self, kind):
        r = self.rng
        if kind == "int":
            return ast.IntLit(r.randint(0, self.int_max))
        return ast.StrLit("".join(r.choice(self.alphabet) for _ in range(r.randint(1, 3))))

    def pattern(self):
        r = self.rng
        pieces = [r.choice(self.alphabet + "%_") for _ in range(r.randint(1, 3))]
        if r.random() < 0.7:
            pieces.append("%")
        return ast.StrLit("".join(pieces))

    def column(self, scope, kind=None):
        choices = [(b, c, k) for b, t in scope for c, k in self.schema[t] if kind in (None, k)]
        if not choices:
            return None
        b, c, k = self.rng.choice(choices)
        return ast.ColumnRef(b, c), k

    def predicate(self, scope, depth):
        r = self.rng
        roll = r.random()
        if depth > 0 and roll < 0.25:
            return ast.BinOp(r.choice(ast.LOGICAL), self.predicate(scope, depth - 1),
                             self.predicate(scope, depth - 1))
        if depth > 0 and roll < 0.32:
            return ast.Not(self.predicate(scope, depth - 1))
        ref, kind = self.column(scope)
        form = r.randrange(7)
        if form == 0:
            lo, hi = sorted((self.lit(kind), self.lit(kind)), key=lambda x: x.value)
            return ast.Between(ref, lo, hi, r.random() < 0.2)
        if form == 1:
            return ast.InList(ref, tuple(self.lit(kind) for _ in range(r.randint(1, 3))),
                              r.random() < 0.2)
        if form == 2:
            return ast.IsNull(ref, r.random() < 0.5)
        if form == 3 and kind == "text":
            return ast.Like(ref, self.pattern(), r.random() < 0.2)
        if form == 4:
            other = self.column(scope, kind)[0]
            return ast.BinOp(r.choice(ast.COMPARISONS), ref, other)
        lit = self.lit(kind)
        op = r.choice(ast.COMPARISONS)
        return ast.BinOp(op, lit, ref) if r.random() < 0.2 else ast.BinOp(op, ref, lit)

    def query(self):
        r = self.rng
        tables = list(self.schema)
        first = r.choice(tables)
        scope = [("t0", first)]
        joins = []
        for i in range(r.choice((0, 0, 1))):
            t = r.choice(tables)
            b = f"t{i + 1}"
            left_ref, kind = self.column(scope)
            right = [c for c, k in self.schema[t] if k == kind]
            if not right:
                break
            joins.append(ast.Join(ast.TableRef(t, b), left_ref, ast.ColumnRef(b, r.choice(right))))
            scope.append((b, t))
        where = self.predicate(scope, 2) if r.random() < 0.8 else None
        grouped = r.random() < 0.3
        order_by, group_by, having, distinct = (), (), None, False
        if grouped:
            key = self.column(scope)[0]
            group_by = (key,)
            cols = [ast.Projection(key), ast.Projection(ast.Aggregate("COUNT", None))]
            for func in r.sample(("MIN", "MAX", "SUM", "COUNT"), 2):
                ref, kind = self.column(scope, "int" if func == "SUM" else None)
                cols.append(ast.Projection(ast.Aggregate(func, ref)))
            if r.random() < 0.4:
                having = ast.BinOp(">", ast.Aggregate("COUNT", None), ast.IntLit(r.randint(0, 3)))
            order_by = (ast.OrderItem(key, r.random() < 0.5),)
        elif r.random() < 0.2:
            cols = [ast.Projection(ast.Aggregate(r.choice(("MIN", "MAX", "COUNT")),
                                                 self.column(scope)[0]))]
        else:
            if r.random() < 0.25:
                cols = [ast.Star()]
            else:
                cols = [ast.Projection(self.column(scope)[0]) for _ in range(r.randint(1, 3))]
            distinct = r.random() < 0.2
            if r.random() < 0.4 and not distinct:
                # sort on every column of the scope so the order is total
                order_by = tuple(ast.OrderItem(ast.ColumnRef(b, c), r.random() < 0.5)
                                 for b, t in scope for c, _ in self.schema[t])
        limit = r.randint(0, 20) if order_by and r.random() < 0.5 else None
        return ast.Select(tuple(cols), ast.TableRef(first, "t0"), tuple(joins), where, group_by,
                          having, order_by, limit, distinct)


def random_query(rng: random.Random, schema: dict, alphabet: str = "ABCDEFGH",
                 int_max: int = 100) -> ast.Select:
    return _Typed(rng, schema, alphabet, int_max).query()
