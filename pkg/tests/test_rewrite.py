import operator
import random
from collections import Counter

import pytest

from dice.backend import Database
from dice.cipherkit import CipherSpec, UPPER
from dice.errors import AmbiguousBinding, DecryptFailure, PolicyError, SchemaError
from dice.rewrite import (NeedsNaive, OpLog, Rewritten, bind_literals, build_schema,
                          decrypt_identifier, decrypt_result, encrypt_identifier, escape,
                          is_identifier, load_policy, null_policy, policy_from_doc,
                          policy_from_text, policy_to_doc, rewrite_statement, unescape, widen_type)
from dice.session import connect
from dice.sqlkit import ast, parse, render

KEY = "000102030405060708090a0b0c0d0e0f"
CUSTOMERS = {"CUSTOMERID": "CHAR(9) PRIMARY KEY", "FIRSTNAME": "VARCHAR(16)",
             "LASTNAME": "VARCHAR(16)", "AGE": "INT", "INCOME": "INT"}
ORDERLINES = {"ORDERLINEID": "INT PRIMARY KEY", "ORDERID": "INT", "PROD_ID": "INT",
              "QUANTITY": "INT", "ORDERDATE": "INT"}


def policy(**doc):
    doc.setdefault("master_key", KEY)
    doc.setdefault("tables", {"CUSTOMERS": CUSTOMERS, "ORDERLINES": ORDERLINES})
    return policy_from_doc(doc)


def rewrite(p, sql):
    return rewrite_statement(p, build_schema(p), parse(sql))


# -- policies -------------------------------------------------------------------

def test_minimal_caesar_policy():
    p = policy_from_text("default: {kind: caesar, shift: 3}\n"
                         "tables: {CUSTOMERS: {LASTNAME: VARCHAR(16), AGE: INT}}\n")
    schema = build_schema(p)
    info = schema.table("CUSTOMERS")
    assert info.cipher_name == "FXVWRPHUV"
    assert info.column("LASTNAME").kind == "caesar"
    assert info.column("AGE").kind == "null"  # caesar cannot hold integers


def test_legacy_property_names_and_aliases():
    p = policy_from_doc({"cipher": {"dice_cipher_class": "rotating", "dice_shift": 3},
                         "tables": {"T": {"A": "VARCHAR(3)"}}})
    assert p.identifier_spec.kind == "caesar" and p.identifier_spec.shift == 3
    assert policy_from_doc({"default": "dummy"}).is_null


@pytest.mark.parametrize("doc", [
    {"columns": {"CUSTOMERS.LASTNAME": "ope"}},
    {"columns": {"CUSTOMERS.AGE": {"kind": "caesar", "shift": 1}}},
    {"default": {"kind": "rot13"}},
    {"default": {"kind": "caesar", "shift": 40}},
    {"default": "detblock", "master_key": "00"},
    {"default": "detblock", "master_key": "not hex"},
    {"columns": {"CUSTOMERS.NOPE": "detblock"}},
    {"identifier_cipher": "ope"},
    {"surprise": 1},
    {"tables": {"T": {"A": "INT", "a": "INT"}}},
    {"tables": {"T": {"A": "INT"}, "t": {"B": "INT"}}, "identifier_cipher": "null"},
    {"domains": {"D": ["CUSTOMERS.AGE", "CUSTOMERS.LASTNAME"]}},
])
def test_policy_errors(doc):
    with pytest.raises(PolicyError):
        policy(**doc)


def test_policy_round_trips_through_doc(tmp_path):
    p = policy(identifier_cipher={"kind": "substitution"}, defaults={"int": "ope", "text": "detblock"},
               columns={"CUSTOMERS.CUSTOMERID": "ff1"})
    path = tmp_path / "p.yaml"
    import yaml
    path.write_text(yaml.safe_dump(policy_to_doc(p)))
    q = load_policy(str(path))
    s1, s2 = build_schema(p), build_schema(q)
    for t in s1.tables:
        assert s2.table(t.name).cipher_name == t.cipher_name
        for c in t.columns:
            assert s2.table(t.name).column(c.name).kind == c.kind
    with pytest.raises(PolicyError):
        load_policy(str(tmp_path / "missing.yaml"))


# -- identifiers ------------------------------------------------------------------

def test_identifier_examples():
    caesar = policy(identifier_cipher={"kind": "caesar", "shift": 3})
    assert encrypt_identifier(caesar, "CUSTOMERS") == "FXVWRPHUV"
    nul = policy(identifier_cipher="null")
    assert encrypt_identifier(nul, "CUSTOMERS") == "CUSTOMERS"


@pytest.mark.parametrize("ident", [{"kind": "caesar", "shift": 3}, {"kind": "substitution"},
                                   "detblock", "null",
                                   {"kind": "caesar", "shift": 30, "alphabet": "upper_digits"}])
def test_identifier_round_trip_and_injective(ident):
    p = policy(identifier_cipher=ident)
    names = set()
    for t in p.tables:
        names.add(t.name)
        names.update(c.name for c in t.columns)
    names.update(["_x", "a_b", "SELECT", "Z9", "lower", "MixedCase_1"])
    enc = {}
    for n in sorted(names):
        e = encrypt_identifier(p, n)
        # the null cipher is the identity, keywords included
        assert is_identifier(e) or ident == "null"
        assert decrypt_identifier(p, e) == n
        enc[e] = n
    assert len(enc) == len(names)


def test_escape_rules():
    assert escape("AB_c1") == "AB__c1"
    assert escape("9A") == "_d9A"
    assert escape("select") == "_kselect"
    assert escape("a-b") == "a_x00002db"
    for raw in ("AB_c1", "9A", "select", "a-b", "é€", "__", "_x"):
        assert unescape(escape(raw)) == raw


def test_decrypt_identifier_rejects_non_image():
    p = policy(identifier_cipher="detblock")
    with pytest.raises(DecryptFailure):
        decrypt_identifier(p, "CUSTOMERS")


# -- literal binding ----------------------------------------------------------------

def test_bind_where_literal():
    p = policy(defaults={"int": "ope", "text": "detblock"})
    stmt = parse("SELECT * FROM CUSTOMERS C WHERE C.INCOME < 20001")
    b = bind_literals(stmt, build_schema(p))
    (lit, col), = b.bound()
    assert lit == ast.IntLit(20001) and col.qualified == "CUSTOMERS.INCOME"


def test_bind_ambiguous_arithmetic():
    p = policy(defaults={"int": "ope", "text": "detblock"})
    with pytest.raises(AmbiguousBinding):
        bind_literals(parse("SELECT * FROM CUSTOMERS C WHERE C.INCOME = C.AGE * 1000"),
                      build_schema(p))
    outcome = rewrite(p, "SELECT * FROM CUSTOMERS C WHERE C.INCOME = C.AGE * 1000")
    assert isinstance(outcome, NeedsNaive)


def test_bind_insert_positional():
    p = policy(defaults={"int": "ope", "text": "detblock"})
    stmt = parse("INSERT INTO CUSTOMERS VALUES ('000000001', 'ANNA', 'SMITH', 30, 40000)")
    b = bind_literals(stmt, build_schema(p))
    cols = [c.name for _, c in b.bound()]
    assert cols == ["CUSTOMERID", "FIRSTNAME", "LASTNAME", "AGE", "INCOME"]


def test_free_literals_untouched():
    p = policy(columns={"CUSTOMERS.INCOME": "ope"})
    out = rewrite(p, "SELECT C.AGE FROM CUSTOMERS C WHERE C.AGE > 30 AND C.INCOME > 5")
    assert isinstance(out, Rewritten)
    assert "> 30" in out.sql and "> 5 " not in out.sql + " "


# -- rewriting ------------------------------------------------------------------------

def test_max_over_ope_is_rewritten():
    p = policy(defaults={"int": "ope", "text": "detblock"}, identifier_cipher="detblock")
    out = rewrite(p, "SELECT MAX(C.INCOME) FROM CUSTOMERS C")
    assert isinstance(out, Rewritten)
    agg = out.statement.columns[0].expr
    assert agg.func == "MAX"
    assert "INCOME" not in out.sql and "CUSTOMERS" not in out.sql


@pytest.mark.parametrize("kind", ["caesar", "substitution", "ope", "ff1", "detblock"])
def test_sum_needs_naive(kind):
    cols = {"ORDERLINES.QUANTITY": kind} if kind in ("ope", "detblock") else {}
    p = policy(columns=cols, defaults={"int": "ope" if kind not in ("ope", "detblock") else "null"})
    out = rewrite(p, "SELECT SUM(O.QUANTITY) FROM ORDERLINES O GROUP BY PROD_ID "
                     "HAVING MAX(O.ORDERDATE) > 20111215")
    assert isinstance(out, NeedsNaive)
    assert "SUM requires homomorphic" in out.reason


def test_null_policy_is_identity():
    p = null_policy(policy().tables)
    for sql in ("SELECT C.FIRSTNAME FROM CUSTOMERS C WHERE C.INCOME < 20001 ORDER BY C.AGE",
                "SELECT SUM(O.QUANTITY) FROM ORDERLINES O GROUP BY PROD_ID",
                "INSERT INTO CUSTOMERS VALUES ('1', 'A', 'B', 1, 2)"):
        out = rewrite(p, sql)
        assert isinstance(out, Rewritten) and out.sql == render(parse(sql))


ALL_QUERIES = {"simple", "join", "orderby", "where", "between", "like", "aggregate", "function",
               "groupby"}
REWRITABLE = {
    "caesar": ALL_QUERIES, "substitution": ALL_QUERIES, "ff1": ALL_QUERIES,
    "ope": ALL_QUERIES - {"like", "function", "groupby"},
    "detblock": {"simple"},
}


@pytest.mark.parametrize("name", sorted(REWRITABLE))
def test_rewriting_preserves_shape(name):
    from dice.bench import QUERIES
    from dice.bench.policies import bench_policy
    p = bench_policy(name)
    rewritten = set()
    for q in QUERIES:
        stmt = parse(q.sql)
        out = rewrite(p, q.sql)
        if not isinstance(out, Rewritten):
            continue
        rewritten.add(q.name)
        shape = [type(n).__name__ for n in ast.walk(stmt)]
        assert [type(n).__name__ for n in ast.walk(out.statement)] == shape
        assert parse(out.sql) == out.statement
    assert rewritten == REWRITABLE[name]


def test_join_requires_same_cipher():
    p = policy(tables={"A": {"K": "INT"}, "B": {"K": "INT"}},
               columns={"A.K": "ope", "B.K": "detblock"})
    out = rewrite(p, "SELECT A.K FROM A A INNER JOIN B B ON A.K = B.K")
    assert isinstance(out, NeedsNaive) and "different ciphers" in out.reason
    shared = policy(tables={"A": {"K": "INT"}, "B": {"K": "INT"}}, default="detblock",
                    domains={"K": ["A.K", "B.K"]})
    assert isinstance(rewrite(shared, "SELECT A.K FROM A A INNER JOIN B B ON A.K = B.K"),
                      Rewritten)


def test_unknown_table_or_column():
    p = policy()
    with pytest.raises(SchemaError):
        rewrite(p, "SELECT X FROM NOPE")
    with pytest.raises(SchemaError):
        rewrite(p, "SELECT C.NOPE FROM CUSTOMERS C")


# -- capability matrix ------------------------------------------------------------------

OPS = {
    "=": "SELECT ID FROM T WHERE V = {l}",
    "<>": "SELECT ID FROM T WHERE V <> {l}",
    "IN": "SELECT ID FROM T WHERE V IN ({l}, {l2})",
    "<": "SELECT ID FROM T WHERE V < {l}",
    ">": "SELECT ID FROM T WHERE V > {l}",
    "<=": "SELECT ID FROM T WHERE V <= {l}",
    ">=": "SELECT ID FROM T WHERE V >= {l}",
    "BETWEEN": "SELECT ID FROM T WHERE V BETWEEN {l} AND {l2}",
    "ORDER BY": "SELECT ID, V FROM T ORDER BY V, ID",
    "MIN": "SELECT MIN(V) FROM T",
    "MAX": "SELECT MAX(V) FROM T",
    "LIKE": "SELECT ID FROM T WHERE V LIKE '1%'",
    "COUNT(*)": "SELECT COUNT(*) FROM T WHERE V = {l}",
    "COUNT": "SELECT COUNT(V) FROM T",
    "GROUP BY": "SELECT V, COUNT(*) FROM T GROUP BY V",
    "SUM": "SELECT SUM(V) FROM T",
    "AVG": "SELECT AVG(V) FROM T",
    "arithmetic": "SELECT ID FROM T WHERE V + 1 = {l}",
    "JOIN": "SELECT A.ID FROM T A INNER JOIN T B ON A.V = B.V",
    "IS NULL": "SELECT ID FROM T WHERE V IS NULL",
}
R, N, X = "rewritten", "naive", None  # X: operator does not apply to the value kind
#                 =  <> IN  <  >  <= >= BT OB MIN MAX LK C* C  GB SUM AVG AR JN NUL
MATRIX = {
    ("null", "INT"):          [R, R, R, R, R, R, R, R, R, R, R, X, R, R, R, R, R, R, R, R],
    ("null", "VARCHAR(8)"):   [R, R, R, R, R, R, R, R, R, R, R, R, R, R, R, X, X, X, R, R],
    ("caesar", "VARCHAR(8)"): [R, R, R, N, N, N, N, N, N, N, N, R, R, R, R, X, X, X, R, R],
    ("substitution", "VARCHAR(8)"):
                              [R, R, R, N, N, N, N, N, N, N, N, R, R, R, R, X, X, X, R, R],
    ("ope", "INT"):           [R, R, R, R, R, R, R, R, R, R, R, X, R, R, R, N, N, N, R, R],
    ("ff1", "VARCHAR(8)"):    [R, R, R, N, N, N, N, N, N, N, N, N, R, R, R, X, X, X, R, R],
    ("detblock", "INT"):      [R, R, R, N, N, N, N, N, N, N, N, X, R, R, R, N, N, N, R, R],
    ("detblock", "VARCHAR(8)"):
                              [R, R, R, N, N, N, N, N, N, N, N, N, R, R, R, X, X, X, R, R],
}


def _matrix_doc(kind, vtype):
    return {"master_key": KEY, "identifier_cipher": {"kind": "caesar", "shift": 7},
            "default": "null", "columns": {"T.V": {"kind": kind}},
            "tables": {"T": {"ID": "INT PRIMARY KEY", "V": vtype}}}


def test_capability_matrix_is_complete():
    kinds = {k for k, _ in MATRIX}
    assert kinds == {"null", "caesar", "substitution", "ope", "ff1", "detblock"}
    assert all(len(row) == len(OPS) for row in MATRIX.values())


@pytest.mark.parametrize("kind,vtype", list(MATRIX), ids=lambda x: str(x))
def test_capability_matrix(kind, vtype):
    text = vtype != "INT"
    rng = random.Random(1)
    values = [None] + ([f"{rng.randint(10, 99)}" for _ in range(30)] if text
                       else [rng.randint(0, 60) for _ in range(30)])
    rows = [(i, v) for i, v in enumerate(values)]
    lit, lit2 = ("'12'", "'50'") if text else ("12", "50")

    plain = Database()
    plain.execute(f"CREATE TABLE T (ID INT PRIMARY KEY, V {vtype})")
    enc_db = Database()
    with connect(enc_db, policy=_matrix_doc(kind, vtype), mode="fallback") as s:
        s.execute(f"CREATE TABLE T (ID INT PRIMARY KEY, V {vtype})")
        for i, v in rows:
            sql = f"INSERT INTO T VALUES ({i}, {'NULL' if v is None else repr(v) if text else v})"
            s.execute(sql)
            plain.execute(sql)
        for (op, template), expected in zip(OPS.items(), MATRIX[(kind, vtype)]):
            sql = template.format(l=lit, l2=lit2)
            if expected is None:
                continue
            outcome = rewrite_statement(s.policy, s.schema, parse(sql))
            got = "rewritten" if isinstance(outcome, Rewritten) else "naive"
            assert got == expected, (kind, op, getattr(outcome, "reason", None))
            # whatever the strategy, the answer must equal plaintext execution
            rs, rep = s.execute(sql)
            want = plain.execute(sql).rows
            if "ORDER BY" in sql:
                assert rs.rows == want, (kind, op)
            else:
                assert Counter(rs.rows) == Counter(want), (kind, op)
            assert rep.strategy == ("passthrough" if kind == "null" and s.passthrough
                                    else expected), (kind, op)


# -- widening -------------------------------------------------------------------------------

def test_widen_type():
    t = ast.ColumnType
    assert widen_type(t("INT"), CipherSpec("ope", domain_bits=32, range_bits=48)) == t("BIGINT")
    assert widen_type(t("VARCHAR", 10), CipherSpec("caesar", shift=1)) == t("VARCHAR", 10)
    assert widen_type(t("VARCHAR", 10), CipherSpec("detblock")) == t("VARCHAR", 64)
    assert widen_type(t("CHAR", 9), CipherSpec("ff1")) == t("CHAR", 9)
    assert widen_type(t("INT", primary_key=True), CipherSpec("detblock")) == \
        t("VARCHAR", 64, True)
    from dice.cipherkit.detblock import ciphertext_hex_len
    assert ciphertext_hex_len(10) == 64


def test_widen_incompatible():
    from dice.errors import IncompatibleType
    with pytest.raises(IncompatibleType):
        widen_type(ast.ColumnType("VARCHAR", 3), CipherSpec("ope"))


# -- result decryption ---------------------------------------------------------------------------

def test_decrypt_result_max_count_null():
    p = policy(identifier_cipher="detblock", defaults={"int": "ope", "text": "detblock"})
    schema = build_schema(p)
    db = Database()
    incomes = [12000, 55000, None, 31000]
    with connect(db, policy=p) as s:
        s.execute("CREATE TABLE CUSTOMERS (CUSTOMERID CHAR(9) PRIMARY KEY, FIRSTNAME VARCHAR(16), "
                  "LASTNAME VARCHAR(16), AGE INT, INCOME INT)")
        for i, inc in enumerate(incomes):
            s.execute(f"INSERT INTO CUSTOMERS VALUES ('{i:09d}', 'A', NULL, 30, "
                      f"{'NULL' if inc is None else inc})")
    stmt = parse("SELECT MAX(C.INCOME), COUNT(*), C.LASTNAME FROM CUSTOMERS C GROUP BY C.LASTNAME")
    ops = OpLog()
    out = rewrite_statement(p, schema, stmt, ops)
    cipher_rs = db.execute(out.statement)
    assert cipher_rs.rows[0][0] != 55000
    rs = decrypt_result(p, schema, stmt, cipher_rs)
    assert rs.columns == ["MAX(INCOME)", "COUNT(*)", "LASTNAME"]
    assert rs.rows == [(55000, 4, None)]


CMP = {"<": operator.lt, ">": operator.gt, "<=": operator.le, ">=": operator.ge,
       "=": operator.eq, "<>": operator.ne}


def test_ope_comparison_soundness_bruteforce():
    p = policy(identifier_cipher="null", defaults={"int": "ope", "text": "null"})
    rng = random.Random(8)
    db = Database()
    ages = [rng.randint(0, 120) for _ in range(1000)]
    with connect(db, policy=p) as s:
        s.execute("CREATE TABLE CUSTOMERS (CUSTOMERID CHAR(9) PRIMARY KEY, FIRSTNAME VARCHAR(16), "
                  "LASTNAME VARCHAR(16), AGE INT, INCOME INT)")
        values = ", ".join(f"('{i:09d}', 'A', 'B', {a}, 0)" for i, a in enumerate(ages))
        s.execute(f"INSERT INTO CUSTOMERS VALUES {values}")
        for _ in range(60):
            op = rng.choice(["<", ">", "<=", ">=", "=", "<>"])
            k = rng.randint(-1, 121) if op in ("=", "<>") else rng.randint(0, 121)
            rs, rep = s.execute(f"SELECT CUSTOMERID FROM CUSTOMERS WHERE AGE {op} {k}")
            cmp = CMP[op]
            want = {f"{i:09d}" for i, a in enumerate(ages) if cmp(a, k)}
            if k >= 0:
                assert rep.strategy == "rewritten"
            assert {r[0] for r in rs.rows} == want, (op, k)
