"""Immutable AST for the supported SQL subset.

Nodes are frozen dataclasses so structural equality is plain ``==``; list-like
fields are tuples.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

AGGREGATES = ("COUNT", "MIN", "MAX", "SUM", "AVG")
COMPARISONS = ("=", "<>", "<", ">", "<=", ">=")
ARITHMETIC = ("+", "-", "*", "/")
LOGICAL = ("AND", "OR")


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class ColumnRef:
    table: Optional[str]
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class NullLit:
    pass


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Between:
    expr: "Expr"
    low: "Expr"
    high: "Expr"
    negated: bool = False


@dataclass(frozen=True)
class Like:
    expr: "Expr"
    pattern: StrLit
    negated: bool = False


@dataclass(frozen=True)
class InList:
    expr: "Expr"
    items: tuple
    negated: bool = False


@dataclass(frozen=True)
class IsNull:
    expr: "Expr"
    negated: bool = False


@dataclass(frozen=True)
class Aggregate:
    func: str
    arg: Optional["Expr"]  # None means COUNT(*)


Literal = Union[IntLit, StrLit, NullLit]
Expr = Union[ColumnRef, IntLit, StrLit, NullLit, BinOp, Not, Between, Like, InList, IsNull,
             Aggregate]
LITERAL_TYPES = (IntLit, StrLit, NullLit)


# -- clauses -----------------------------------------------------------------

@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class Projection:
    expr: Expr
    label: Optional[str] = None


@dataclass(frozen=True)
class TableRef:
    name: str
    alias: Optional[str] = None

    @property
    def binding(self) -> str:
        return self.alias or self.name


@dataclass(frozen=True)
class Join:
    table: TableRef
    left: ColumnRef
    right: ColumnRef


@dataclass(frozen=True)
class OrderItem:
    column: ColumnRef
    descending: bool = False


@dataclass(frozen=True)
class ColumnType:
    base: str  # INT, BIGINT, VARCHAR, CHAR
    length: Optional[int] = None
    primary_key: bool = False

    @property
    def is_text(self) -> bool:
        return self.base in ("VARCHAR", "CHAR")

    def sql(self) -> str:
        s = f"{self.base}({self.length})" if self.is_text else self.base
        return s + " PRIMARY KEY" if self.primary_key else s


@dataclass(frozen=True)
class ColumnDef:
    name: str
    type: ColumnType


@dataclass(frozen=True)
class Assignment:
    column: str
    value: Expr


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class Select:
    columns: tuple  # of Projection, or a single Star
    from_: TableRef
    joins: tuple = ()
    where: Optional[Expr] = None
    group_by: tuple = ()
    having: Optional[Expr] = None
    order_by: tuple = ()
    limit: Optional[int] = None
    distinct: bool = False

    @property
    def is_star(self) -> bool:
        return len(self.columns) == 1 and isinstance(self.columns[0], Star)

    @property
    def tables(self) -> tuple:
        return (self.from_,) + tuple(j.table for j in self.joins)


@dataclass(frozen=True)
class Insert:
    table: str
    columns: Optional[tuple]
    rows: tuple  # of tuples of literals


@dataclass(frozen=True)
class Update:
    table: TableRef
    assignments: tuple
    where: Optional[Expr] = None


@dataclass(frozen=True)
class Delete:
    table: TableRef
    where: Optional[Expr] = None


@dataclass(frozen=True)
class CreateTable:
    name: str
    columns: tuple  # of ColumnDef


@dataclass(frozen=True)
class DropTable:
    name: str


@dataclass(frozen=True)
class Begin:
    pass


@dataclass(frozen=True)
class Commit:
    pass


@dataclass(frozen=True)
class Rollback:
    pass


Statement = Union[Select, Insert, Update, Delete, CreateTable, DropTable, Begin, Commit, Rollback]


def walk(node):
    """Yield ``node`` and every AST node beneath it, depth first."""
    if isinstance(node, tuple):
        for item in node:
            yield from walk(item)
        return
    fields = getattr(node, "__dataclass_fields__", None)
    if fields is None:
        return
    yield node
    for name in fields:
        yield from walk(getattr(node, name))


def contains_aggregate(expr) -> bool:
    return any(isinstance(n, Aggregate) for n in walk(expr))


def column_refs(expr) -> list:
    return [n for n in walk(expr) if isinstance(n, ColumnRef)]
