"""Structure-preserving AST rewrite driven by identifier and literal hooks."""
from __future__ import annotations

from dataclasses import replace

from . import ast


class Visitor:
    """Identity hooks; subclasses override what they need.

    ``column_ref`` receives the original node so callers can resolve it against
    their own scope; ``literal`` likewise gets the original literal object,
    which lets a binder keyed on ``id(node)`` find it.
    """

    def table_name(self, name: str) -> str:
        return name

    def alias(self, name: str) -> str:
        return name

    def column_ref(self, ref: ast.ColumnRef) -> ast.ColumnRef:
        return ref

    def column_name(self, table: str, name: str) -> str:
        return name

    def label(self, name: str) -> str:
        return name

    def literal(self, lit):
        return lit


def transform(stmt, visitor: Visitor):
    return _Transformer(visitor).statement(stmt)


class _Transformer:
    def __init__(self, v: Visitor):
        self.v = v

    def table_ref(self, t: ast.TableRef) -> ast.TableRef:
        return ast.TableRef(self.v.table_name(t.name),
                            self.v.alias(t.alias) if t.alias else None)

    def expr(self, e):
        v = self.v
        if e is None:
            return None
        if isinstance(e, ast.ColumnRef):
            return v.column_ref(e)
        if isinstance(e, ast.LITERAL_TYPES):
            return v.literal(e)
        if isinstance(e, ast.BinOp):
            return ast.BinOp(e.op, self.expr(e.left), self.expr(e.right))
        if isinstance(e, ast.Not):
            return ast.Not(self.expr(e.operand))
        if isinstance(e, ast.Between):
            return ast.Between(self.expr(e.expr), self.expr(e.low), self.expr(e.high), e.negated)
        if isinstance(e, ast.Like):
            return ast.Like(self.expr(e.expr), v.literal(e.pattern), e.negated)
        if isinstance(e, ast.InList):
            return ast.InList(self.expr(e.expr), tuple(v.literal(i) for i in e.items), e.negated)
        if isinstance(e, ast.IsNull):
            return ast.IsNull(self.expr(e.expr), e.negated)
        if isinstance(e, ast.Aggregate):
            return ast.Aggregate(e.func, self.expr(e.arg))
        raise TypeError(f"not an expression: {e!r}")

    def projection(self, p):
        if isinstance(p, ast.Star):
            return p
        return ast.Projection(self.expr(p.expr), self.v.label(p.label) if p.label else None)

    def statement(self, s):
        v = self.v
        if isinstance(s, ast.Select):
            return ast.Select(
                columns=tuple(self.projection(p) for p in s.columns),
                from_=self.table_ref(s.from_),
                joins=tuple(ast.Join(self.table_ref(j.table), v.column_ref(j.left),
                                     v.column_ref(j.right)) for j in s.joins),
                where=self.expr(s.where),
                group_by=tuple(v.column_ref(c) for c in s.group_by),
                having=self.expr(s.having),
                order_by=tuple(ast.OrderItem(v.column_ref(o.column), o.descending)
                               for o in s.order_by),
                limit=s.limit,
                distinct=s.distinct,
            )
        if isinstance(s, ast.Insert):
            cols = None
            if s.columns is not None:
                cols = tuple(v.column_name(s.table, c) for c in s.columns)
            rows = tuple(tuple(v.literal(x) for x in r) for r in s.rows)
            return ast.Insert(v.table_name(s.table), cols, rows)
        if isinstance(s, ast.Update):
            assigns = tuple(ast.Assignment(v.column_name(s.table.name, a.column), self.expr(a.value))
                            for a in s.assignments)
            return ast.Update(self.table_ref(s.table), assigns, self.expr(s.where))
        if isinstance(s, ast.Delete):
            return ast.Delete(self.table_ref(s.table), self.expr(s.where))
        if isinstance(s, ast.CreateTable):
            cols = tuple(replace(c, name=v.column_name(s.name, c.name)) for c in s.columns)
            return ast.CreateTable(v.table_name(s.name), cols)
        if isinstance(s, ast.DropTable):
            return ast.DropTable(v.table_name(s.name))
        return s
