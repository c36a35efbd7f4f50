"""Canonical SQL text for AST nodes.

Keywords come out uppercase, identifiers verbatim, and parentheses appear only
where the parser's precedence would otherwise build a different tree.
"""
from __future__ import annotations

from . import ast

# Binding strength per node class; higher binds tighter.
_OR, _AND, _NOT, _PRED, _ADD, _MUL, _ATOM = range(1, 8)
_BINOP_PREC = {"OR": _OR, "AND": _AND, "+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL}
for _op in ast.COMPARISONS:
    _BINOP_PREC[_op] = _PRED


def _prec(e) -> int:
    if isinstance(e, ast.BinOp):
        return _BINOP_PREC[e.op]
    if isinstance(e, ast.Not):
        return _NOT
    if isinstance(e, (ast.Between, ast.Like, ast.InList, ast.IsNull)):
        return _PRED
    return _ATOM


def quote(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


def render_literal(e) -> str:
    if isinstance(e, ast.IntLit):
        return str(e.value)
    if isinstance(e, ast.StrLit):
        return quote(e.value)
    if isinstance(e, ast.NullLit):
        return "NULL"
    raise TypeError(f"not a literal: {e!r}")


def render_expr(e, min_prec: int = 0) -> str:
    text = _expr(e)
    return f"({text})" if _prec(e) < min_prec else text


def _expr(e) -> str:
    if isinstance(e, ast.ColumnRef):
        return f"{e.table}.{e.name}" if e.table else e.name
    if isinstance(e, ast.LITERAL_TYPES):
        return render_literal(e)
    if isinstance(e, ast.BinOp):
        p = _BINOP_PREC[e.op]
        if p == _PRED:
            # comparisons do not chain, so both operands must bind tighter
            return f"{render_expr(e.left, _ADD)} {e.op} {render_expr(e.right, _ADD)}"
        return f"{render_expr(e.left, p)} {e.op} {render_expr(e.right, p + 1)}"
    if isinstance(e, ast.Not):
        return f"NOT {render_expr(e.operand, _NOT)}"
    if isinstance(e, ast.Between):
        kw = "NOT BETWEEN" if e.negated else "BETWEEN"
        return f"{render_expr(e.expr, _ADD)} {kw} {_expr(e.low)} AND {_expr(e.high)}"
    if isinstance(e, ast.Like):
        kw = "NOT LIKE" if e.negated else "LIKE"
        return f"{render_expr(e.expr, _ADD)} {kw} {render_literal(e.pattern)}"
    if isinstance(e, ast.InList):
        kw = "NOT IN" if e.negated else "IN"
        items = ", ".join(render_literal(i) for i in e.items)
        return f"{render_expr(e.expr, _ADD)} {kw} ({items})"
    if isinstance(e, ast.IsNull):
        return f"{render_expr(e.expr, _ADD)} IS {'NOT ' if e.negated else ''}NULL"
    if isinstance(e, ast.Aggregate):
        return f"{e.func}({'*' if e.arg is None else render_expr(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def default_label(expr) -> str:
    """Column label the engine reports for an unlabelled projection."""
    if isinstance(expr, ast.ColumnRef):
        return expr.name
    if isinstance(expr, ast.Aggregate):
        return f"{expr.func}({'*' if expr.arg is None else default_label(expr.arg)})"
    return render_expr(expr)


def _table_ref(t: ast.TableRef) -> str:
    return f"{t.name} {t.alias}" if t.alias else t.name


def _projection(p) -> str:
    if isinstance(p, ast.Star):
        return "*"
    text = render_expr(p.expr)
    return f"{text} AS {p.label}" if p.label else text


def render(stmt) -> str:
    if isinstance(stmt, ast.Select):
        parts = ["SELECT DISTINCT" if stmt.distinct else "SELECT",
                 ", ".join(_projection(c) for c in stmt.columns),
                 "FROM", _table_ref(stmt.from_)]
        for j in stmt.joins:
            parts.append(f"INNER JOIN {_table_ref(j.table)} ON {_expr(j.left)} = {_expr(j.right)}")
        if stmt.where is not None:
            parts.append("WHERE " + render_expr(stmt.where))
        if stmt.group_by:
            parts.append("GROUP BY " + ", ".join(_expr(c) for c in stmt.group_by))
        if stmt.having is not None:
            parts.append("HAVING " + render_expr(stmt.having))
        if stmt.order_by:
            parts.append("ORDER BY " + ", ".join(
                _expr(o.column) + (" DESC" if o.descending else "") for o in stmt.order_by))
        if stmt.limit is not None:
            parts.append(f"LIMIT {stmt.limit}")
        return " ".join(parts)
    if isinstance(stmt, ast.Insert):
        cols = f" ({', '.join(stmt.columns)})" if stmt.columns is not None else ""
        rows = ", ".join("(" + ", ".join(render_literal(v) for v in r) + ")" for r in stmt.rows)
        return f"INSERT INTO {stmt.table}{cols} VALUES {rows}"
    if isinstance(stmt, ast.Update):
        sets = ", ".join(f"{a.column} = {render_expr(a.value)}" for a in stmt.assignments)
        text = f"UPDATE {_table_ref(stmt.table)} SET {sets}"
        return text + (" WHERE " + render_expr(stmt.where) if stmt.where is not None else "")
    if isinstance(stmt, ast.Delete):
        text = f"DELETE FROM {_table_ref(stmt.table)}"
        return text + (" WHERE " + render_expr(stmt.where) if stmt.where is not None else "")
    if isinstance(stmt, ast.CreateTable):
        cols = ", ".join(f"{c.name} {c.type.sql()}" for c in stmt.columns)
        return f"CREATE TABLE {stmt.name} ({cols})"
    if isinstance(stmt, ast.DropTable):
        return f"DROP TABLE {stmt.name}"
    if isinstance(stmt, ast.Begin):
        return "BEGIN"
    if isinstance(stmt, ast.Commit):
        return "COMMIT"
    if isinstance(stmt, ast.Rollback):
        return "ROLLBACK"
    raise TypeError(f"not a statement: {stmt!r}")
