import random

import pytest

from conftest import FIXTURES
from dice.bench import QUERIES
from dice.errors import ParseError
from dice.sqlkit import (Visitor, ast, parse, parse_expression, random_statement, render,
                         split_statements, tokenize, transform)

CORPUS = [line for line in (FIXTURES / "statements.sql").read_text().splitlines() if line]


def col(t, n):
    return ast.ColumnRef(t, n)


def roundtrip(stmt):
    return parse(render(stmt))


# -- parse --------------------------------------------------------------------

def test_simple_projection_query():
    s = parse("SELECT C.FIRSTNAME, C.LASTNAME FROM CUSTOMERS C WHERE C.CUSTOMERID = '123456789'")
    assert s == ast.Select(
        (ast.Projection(col("C", "FIRSTNAME")), ast.Projection(col("C", "LASTNAME"))),
        ast.TableRef("CUSTOMERS", "C"),
        where=ast.BinOp("=", col("C", "CUSTOMERID"), ast.StrLit("123456789")))


def test_between_query():
    s = parse("SELECT count(*) FROM CUSTOMERS C WHERE C.INCOME BETWEEN 30000 AND 40000")
    assert s.columns == (ast.Projection(ast.Aggregate("COUNT", None)),)
    assert s.where == ast.Between(col("C", "INCOME"), ast.IntLit(30000), ast.IntLit(40000))


def test_keywords_case_insensitive_identifiers_preserved():
    a = parse("select Name from Users u where u.Age >= 3 order by u.Age desc limit 2")
    assert a.from_ == ast.TableRef("Users", "u")
    assert a.order_by == (ast.OrderItem(col("u", "Age"), True),)
    assert a.limit == 2
    assert render(a) == "SELECT Name FROM Users u WHERE u.Age >= 3 ORDER BY u.Age DESC LIMIT 2"


def test_string_escape():
    s = parse("SELECT a FROM t WHERE s = 'it''s'")
    assert s.where.right == ast.StrLit("it's")
    assert "'it''s'" in render(s)


@pytest.mark.parametrize("sql", [
    "", "   ", "SELECT", "SELECT a FROM", "SELECT a FROM t WHERE", "SELECT a b c FROM t",
    "SELECT a FROM t LIMIT -1", "SELECT 1.5 FROM t", "SELECT a FROM t WHERE s = 'open",
    "INSERT INTO t VALUES", "CREATE TABLE t (a VARCHAR(0))", "SELECT MAX(MIN(a)) FROM t",
    "SELECT a FROM t x INNER JOIN u y ON x.a > y.b", "SELECT a FROM t; SELECT b FROM t",
    "SELECT a FROM t WHERE a BETWEEN 1 + 1 AND 3", "SELECT a FROM t GROUP BY a + 1",
    "SELECT a FROM t HAVING a > 1", "SELECT a FROM t ORDER BY MAX(a)", "SELECT a FROM t $",
])
def test_parse_errors(sql):
    with pytest.raises(ParseError) as info:
        parse(sql)
    err = info.value
    lines = sql.split("\n")
    assert 1 <= err.line <= len(lines)
    assert 1 <= err.column <= len(lines[err.line - 1]) + 1
    assert f"line {err.line}, column {err.column}" in str(err)


def test_parse_error_reports_expected_tokens():
    with pytest.raises(ParseError) as info:
        parse("SELECT a FROM t WHERE a =")
    assert info.value.expected
    with pytest.raises(ParseError) as info:
        parse("SELECT a\nFROM t\nWHERE ?")
    assert (info.value.line, info.value.column) == (3, 7)


def test_parse_error_positions_stay_in_bounds_on_mutations():
    rng = random.Random(4)
    junk = ["(", ")", ",", "'", "=", "SELECT", "FROM", "1", "x", ";", "*", "BETWEEN", "\n"]
    for _ in range(1500):
        base = rng.choice(CORPUS)
        i = rng.randrange(len(base) + 1)
        text = base[:i] + rng.choice(junk) + base[i + rng.randint(0, 3):]
        try:
            parse(text)
        except ParseError as err:
            lines = text.split("\n")
            assert 1 <= err.line <= len(lines), text
            assert 1 <= err.column <= len(lines[err.line - 1]) + 1, text


# -- precedence ---------------------------------------------------------------

def test_or_binds_weaker_than_and():
    a, b, c = (ast.BinOp("=", col(None, x), ast.IntLit(1)) for x in "abc")
    assert parse_expression("a = 1 OR b = 1 AND c = 1") == ast.BinOp("OR", a, ast.BinOp("AND", b, c))
    assert parse_expression("a = 1 AND b = 1 OR c = 1") == ast.BinOp("OR", ast.BinOp("AND", a, b), c)


def test_not_binds_tighter_than_and_but_weaker_than_comparison():
    a, b = (ast.BinOp("=", col(None, x), ast.IntLit(1)) for x in "ab")
    assert parse_expression("NOT a = 1 AND b = 1") == ast.BinOp("AND", ast.Not(a), b)


def test_arithmetic_precedence():
    e = parse_expression("a + b * 2 - c / 3")
    mul = ast.BinOp("*", col(None, "b"), ast.IntLit(2))
    div = ast.BinOp("/", col(None, "c"), ast.IntLit(3))
    assert e == ast.BinOp("-", ast.BinOp("+", col(None, "a"), mul), div)
    assert parse_expression("(a + b) * 2") == ast.BinOp(
        "*", ast.BinOp("+", col(None, "a"), col(None, "b")), ast.IntLit(2))


def test_render_keeps_structure_with_parentheses():
    e = parse("SELECT a FROM t WHERE (a = 1 OR b = 2) AND NOT (c = 3 OR d = 4)")
    assert roundtrip(e) == e
    assert "(a = 1 OR b = 2) AND NOT (c = 3 OR d = 4)" in render(e)


# -- render -------------------------------------------------------------------

def test_render_examples():
    assert render(ast.Begin()) == "BEGIN"
    assert render(ast.Commit()) == "COMMIT"
    q = parse("SELECT FIRSTNAME,LASTNAME,AGE FROM CUSTOMERS C ORDER BY C.AGE LIMIT 5")
    assert render(q).endswith(" ORDER BY C.AGE LIMIT 5")


@pytest.mark.parametrize("q", QUERIES, ids=lambda q: q.name)
def test_nine_queries_round_trip(q):
    s = parse(q.sql)
    assert roundtrip(s) == s


def test_corpus_round_trip():
    for line in CORPUS:
        s = parse(line)
        assert roundtrip(s) == s, line
        assert render(roundtrip(s)) == render(s)


def test_generated_statements_round_trip():
    rng = random.Random(2024)
    kinds = set()
    for _ in range(1500):
        s = random_statement(rng)
        kinds.add(type(s).__name__)
        text = render(s)
        assert parse(text) == roundtrip(parse(text)), text
        assert parse(text) == s, text
    assert {"Select", "Insert", "Update", "Delete", "CreateTable"} <= kinds


def test_tokenize_and_split():
    toks = tokenize("SELECT a<>b FROM t")
    assert [t.kind for t in toks][:4] == ["KEYWORD", "IDENT", "OP", "IDENT"]
    stmts, rest = split_statements("SELECT 'a;b' FROM t; BEGIN;\nSELECT x")
    assert stmts == ["SELECT 'a;b' FROM t", "BEGIN"]
    assert rest == "SELECT x"


# -- transform ------------------------------------------------------------------

def _node_count(node):
    return sum(1 for _ in ast.walk(node))


def test_identity_visitor():
    for line in CORPUS:
        s = parse(line)
        assert transform(s, Visitor()) == s


class _Upper(Visitor):
    def table_name(self, name):
        return name.upper()

    def alias(self, name):
        return name.upper()

    def column_ref(self, ref):
        return ast.ColumnRef(ref.table.upper() if ref.table else None, ref.name.upper())

    def column_name(self, table, name):
        return name.upper()


def test_uppercase_visitor():
    s = transform(parse("select a from t x"), _Upper())
    assert render(s) == "SELECT A FROM T X"
    for line in CORPUS:
        orig = parse(line)
        up = transform(orig, _Upper())
        assert _node_count(up) == _node_count(orig)


class _Tagger(Visitor):
    def __init__(self):
        self.seen = 0

    def literal(self, lit):
        self.seen += 1
        return lit


def test_literal_visitor_counts_between_literals():
    s = parse("SELECT count(*) FROM CUSTOMERS C WHERE C.INCOME BETWEEN 30000 AND 40000")
    tagger = _Tagger()
    transform(s, tagger)
    independent = sum(1 for n in ast.walk(s) if isinstance(n, ast.LITERAL_TYPES))
    assert tagger.seen == independent == 2
