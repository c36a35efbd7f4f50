"""Hand-written recursive-descent parser for the supported SQL subset.

The grammar is documented in docs/grammar.ebnf.  Precedence from loosest to
tightest: OR, AND, NOT, predicates (comparison, BETWEEN, LIKE, IN, IS NULL),
additive, multiplicative, unary minus on integer literals.
"""
from __future__ import annotations

from dice.errors import ParseError

from . import ast
from .lexer import Token, tokenize

_TYPE_NAMES = ("INT", "INTEGER", "BIGINT", "VARCHAR", "CHAR")


def parse(sql: str) -> ast.Statement:
    return Parser(sql).parse_statement()


def parse_expression(sql: str):
    p = Parser(sql)
    expr = p.expr()
    p.expect_eof()
    return expr


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self._expected: set = set()

    # -- token helpers ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        self._expected = set()
        return t

    def check(self, kind: str, value=None) -> bool:
        t = self.tok
        self._expected.add(value if value is not None else kind.lower())
        return t.kind == kind and (value is None or t.value == value)

    def check_kw(self, *words) -> bool:
        return any(self.check("KEYWORD", w) for w in words)

    def accept_kw(self, word) -> bool:
        if self.check("KEYWORD", word):
            self.advance()
            return True
        return False

    def accept_op(self, op) -> bool:
        if self.check("OP", op):
            self.advance()
            return True
        return False

    def fail(self, message=None):
        t = self.tok
        raise ParseError(message or f"unexpected {t.describe()}", t.line, t.column, self._expected)

    def expect_kw(self, word):
        if not self.accept_kw(word):
            self.fail()

    def expect_op(self, op):
        if not self.accept_op(op):
            self.fail()

    def expect_ident(self) -> str:
        if self.check("IDENT"):
            return self.advance().value
        self.fail()

    def expect_int(self) -> int:
        if self.check("INT"):
            return self.advance().value
        self.fail()

    def expect_eof(self):
        self.accept_op(";")
        if not self.check("EOF"):
            self.fail()

    # -- statements ------------------------------------------------------

    def parse_statement(self) -> ast.Statement:
        t = self.tok
        if t.kind == "EOF":
            self._expected = {"SELECT", "INSERT", "UPDATE", "DELETE", "CREATE", "DROP",
                              "BEGIN", "COMMIT", "ROLLBACK"}
            self.fail("empty statement")
        if self.check_kw("SELECT"):
            stmt = self.select()
        elif self.check_kw("INSERT"):
            stmt = self.insert()
        elif self.check_kw("UPDATE"):
            stmt = self.update()
        elif self.check_kw("DELETE"):
            stmt = self.delete()
        elif self.check_kw("CREATE"):
            stmt = self.create()
        elif self.check_kw("DROP"):
            self.advance()
            self.expect_kw("TABLE")
            stmt = ast.DropTable(self.expect_ident())
        elif self.check_kw("BEGIN"):
            self.advance()
            self.accept_kw("TRANSACTION")
            stmt = ast.Begin()
        elif self.check_kw("COMMIT"):
            self.advance()
            stmt = ast.Commit()
        elif self.check_kw("ROLLBACK"):
            self.advance()
            stmt = ast.Rollback()
        else:
            self.fail()
        self.expect_eof()
        return stmt

    def select(self) -> ast.Select:
        self.expect_kw("SELECT")
        distinct = self.accept_kw("DISTINCT")
        if self.accept_op("*"):
            columns = (ast.Star(),)
        else:
            items = [self.projection()]
            while self.accept_op(","):
                items.append(self.projection())
            columns = tuple(items)
        self.expect_kw("FROM")
        from_ = self.table_ref()
        joins = []
        while self.check_kw("INNER", "JOIN"):
            self.accept_kw("INNER")
            self.expect_kw("JOIN")
            table = self.table_ref()
            self.expect_kw("ON")
            left = self.column_ref()
            self.expect_op("=")
            right = self.column_ref()
            joins.append(ast.Join(table, left, right))
        where = self.expr() if self.accept_kw("WHERE") else None
        group_by = ()
        if self.accept_kw("GROUP"):
            self.expect_kw("BY")
            refs = [self.column_ref()]
            while self.accept_op(","):
                refs.append(self.column_ref())
            group_by = tuple(refs)
        having = None
        if self.check_kw("HAVING"):
            htok = self.advance()
            having = self.expr()
            has_agg = any(isinstance(c, ast.Projection) and ast.contains_aggregate(c.expr)
                          for c in columns)
            if not group_by and not has_agg:
                raise ParseError("HAVING requires GROUP BY or an aggregate projection",
                                 htok.line, htok.column)
        order_by = ()
        if self.accept_kw("ORDER"):
            self.expect_kw("BY")
            items = [self.order_item()]
            while self.accept_op(","):
                items.append(self.order_item())
            order_by = tuple(items)
        limit = self.expect_int() if self.accept_kw("LIMIT") else None
        if where is not None and ast.contains_aggregate(where):
            raise ParseError("aggregates are not allowed in WHERE", self.tok.line, self.tok.column)
        return ast.Select(columns, from_, tuple(joins), where, group_by, having, order_by,
                          limit, distinct)

    def projection(self) -> ast.Projection:
        expr = self.expr()
        label = None
        if self.accept_kw("AS"):
            label = self.expect_ident()
        elif self.check("IDENT"):
            label = self.advance().value
        return ast.Projection(expr, label)

    def table_ref(self) -> ast.TableRef:
        name = self.expect_ident()
        alias = None
        if self.accept_kw("AS"):
            alias = self.expect_ident()
        elif self.check("IDENT"):
            alias = self.advance().value
        return ast.TableRef(name, alias)

    def order_item(self) -> ast.OrderItem:
        ref = self.column_ref()
        if self.accept_kw("DESC"):
            return ast.OrderItem(ref, True)
        self.accept_kw("ASC")
        return ast.OrderItem(ref, False)

    def column_ref(self) -> ast.ColumnRef:
        first = self.expect_ident()
        if self.accept_op("."):
            return ast.ColumnRef(first, self.expect_ident())
        return ast.ColumnRef(None, first)

    def insert(self) -> ast.Insert:
        self.expect_kw("INSERT")
        self.expect_kw("INTO")
        table = self.expect_ident()
        columns = None
        if self.accept_op("("):
            names = [self.expect_ident()]
            while self.accept_op(","):
                names.append(self.expect_ident())
            self.expect_op(")")
            columns = tuple(names)
        self.expect_kw("VALUES")
        rows = [self.value_row()]
        while self.accept_op(","):
            rows.append(self.value_row())
        width = len(rows[0])
        if columns is not None and width != len(columns):
            self.fail(f"VALUES has {width} items for {len(columns)} columns")
        if any(len(r) != width for r in rows):
            self.fail("VALUES rows differ in length")
        return ast.Insert(table, columns, tuple(rows))

    def value_row(self) -> tuple:
        self.expect_op("(")
        vals = [self.literal()]
        while self.accept_op(","):
            vals.append(self.literal())
        self.expect_op(")")
        return tuple(vals)

    def literal(self):
        if self.accept_op("-"):
            return ast.IntLit(-self.expect_int())
        if self.check("INT"):
            return ast.IntLit(self.advance().value)
        if self.check("STRING"):
            return ast.StrLit(self.advance().value)
        if self.accept_kw("NULL"):
            return ast.NullLit()
        self.fail()

    def update(self) -> ast.Update:
        self.expect_kw("UPDATE")
        table = self.table_ref()
        self.expect_kw("SET")
        assigns = [self.assignment()]
        while self.accept_op(","):
            assigns.append(self.assignment())
        where = self.expr() if self.accept_kw("WHERE") else None
        for e in [a.value for a in assigns] + [where]:
            if e is not None and ast.contains_aggregate(e):
                self.fail("aggregates are not allowed in UPDATE")
        return ast.Update(table, tuple(assigns), where)

    def assignment(self) -> ast.Assignment:
        name = self.expect_ident()
        self.expect_op("=")
        return ast.Assignment(name, self.expr())

    def delete(self) -> ast.Delete:
        self.expect_kw("DELETE")
        self.expect_kw("FROM")
        table = self.table_ref()
        where = self.expr() if self.accept_kw("WHERE") else None
        if where is not None and ast.contains_aggregate(where):
            self.fail("aggregates are not allowed in DELETE")
        return ast.Delete(table, where)

    def create(self) -> ast.CreateTable:
        self.expect_kw("CREATE")
        self.expect_kw("TABLE")
        name = self.expect_ident()
        self.expect_op("(")
        cols = [self.column_def()]
        while self.accept_op(","):
            cols.append(self.column_def())
        self.expect_op(")")
        if sum(c.type.primary_key for c in cols) > 1:
            self.fail("at most one PRIMARY KEY column is supported")
        if len({c.name.upper() for c in cols}) != len(cols):
            self.fail("duplicate column name")
        return ast.CreateTable(name, tuple(cols))

    def column_def(self) -> ast.ColumnDef:
        name = self.expect_ident()
        if not self.check_kw(*_TYPE_NAMES):
            self.fail()
        base = self.advance().value
        length = None
        if base == "INTEGER":
            base = "INT"
        if base in ("VARCHAR", "CHAR"):
            self.expect_op("(")
            length = self.expect_int()
            if length < 1:
                self.fail("length must be at least 1")
            self.expect_op(")")
        pk = False
        if self.accept_kw("PRIMARY"):
            self.expect_kw("KEY")
            pk = True
        return ast.ColumnDef(name, ast.ColumnType(base, length, pk))

    # -- expressions -----------------------------------------------------

    def expr(self):
        left = self.and_expr()
        while self.accept_kw("OR"):
            left = ast.BinOp("OR", left, self.and_expr())
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.accept_kw("AND"):
            left = ast.BinOp("AND", left, self.not_expr())
        return left

    def not_expr(self):
        if self.accept_kw("NOT"):
            return ast.Not(self.not_expr())
        return self.predicate()

    def predicate(self):
        left = self.additive()
        for op in ast.COMPARISONS:
            if self.accept_op(op):
                return ast.BinOp(op, left, self.additive())
        negated = self.accept_kw("NOT")
        if self.accept_kw("BETWEEN"):
            low = self.bound()
            self.expect_kw("AND")
            return ast.Between(left, low, self.bound(), negated)
        if self.accept_kw("LIKE"):
            if not self.check("STRING"):
                self.fail()
            return ast.Like(left, ast.StrLit(self.advance().value), negated)
        if self.accept_kw("IN"):
            self.expect_op("(")
            items = [self.literal()]
            while self.accept_op(","):
                items.append(self.literal())
            self.expect_op(")")
            return ast.InList(left, tuple(items), negated)
        if negated:
            self.fail()
        if self.accept_kw("IS"):
            neg = self.accept_kw("NOT")
            self.expect_kw("NULL")
            return ast.IsNull(left, neg)
        return left

    def bound(self):
        if self.check("IDENT"):
            return self.column_ref()
        return self.literal()

    def additive(self):
        left = self.multiplicative()
        while True:
            if self.accept_op("+"):
                left = ast.BinOp("+", left, self.multiplicative())
            elif self.accept_op("-"):
                left = ast.BinOp("-", left, self.multiplicative())
            else:
                return left

    def multiplicative(self):
        left = self.unary()
        while True:
            if self.accept_op("*"):
                left = ast.BinOp("*", left, self.unary())
            elif self.accept_op("/"):
                left = ast.BinOp("/", left, self.unary())
            else:
                return left

    def unary(self):
        if self.accept_op("-"):
            return ast.IntLit(-self.expect_int())
        return self.primary()

    def primary(self):
        t = self.tok
        if self.check("INT"):
            return ast.IntLit(self.advance().value)
        if self.check("STRING"):
            return ast.StrLit(self.advance().value)
        if self.accept_kw("NULL"):
            return ast.NullLit()
        if self.check_kw(*ast.AGGREGATES):
            func = self.advance().value
            self.expect_op("(")
            if func == "COUNT" and self.accept_op("*"):
                arg = None
            else:
                arg = self.expr()
                if ast.contains_aggregate(arg):
                    raise ParseError("aggregates cannot be nested", t.line, t.column)
            self.expect_op(")")
            return ast.Aggregate(func, arg)
        if self.check("IDENT"):
            return self.column_ref()
        if self.accept_op("("):
            e = self.expr()
            self.expect_op(")")
            return e
        self.fail()
