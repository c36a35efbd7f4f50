"""Deterministic DVD-store style dataset.

Dates are integers ``yyyymmdd`` in 2009..2012.  Incomes are placed so that an
exact fraction of customers earns at most 20000 (the selective predicate of
the suite) and a small fraction earns exactly ``AGE * 1000``.
"""
from __future__ import annotations

import datetime
import hashlib
import json
import random
from dataclasses import asdict, dataclass

from dice.backend.engine import Database, Table
from dice.sqlkit import parse

FIRSTNAMES = ("ANNA", "BEN", "CARLA", "DAVID", "EMMA", "FELIX", "GRETA", "HANS", "IDA", "JONAS",
              "KARIN", "LUKAS", "MARIA", "NOAH", "OLGA", "PAUL", "QUIRIN", "ROSA", "SARA", "TOM",
              "ULLA", "VIKTOR", "WILMA", "XAVER", "YVONNE", "ZOE")
LASTNAMES = ("ADAMS", "BAKER", "CLARK", "DAVIS", "EVANS", "FISCHER", "GARCIA", "HALL", "JONES",
             "KING", "LEWIS", "MUELLER", "NELSON", "OWENS", "PARKER", "QUINN", "ROBERTS",
             "SANCHEZ", "SCHMIDT", "SCOTT", "SMITH", "STEWART", "SULLIVAN", "TAYLOR", "TURNER",
             "WAGNER", "WALKER", "WEBER", "WHITE", "YOUNG")
ADJECTIVES = ("SILENT", "RED", "LAST", "DARK", "GOLDEN", "LOST", "WILD", "FROZEN", "HIDDEN",
              "BROKEN", "ENDLESS", "FINAL")
NOUNS = ("RIVER", "NIGHT", "EMPIRE", "GARDEN", "STORM", "HARBOR", "MIRROR", "KINGDOM", "SIGNAL",
         "WINTER", "ORBIT", "TRAIL")

SPECIAL_CUSTOMER = "123456789"
LOW_INCOME_LIMIT = 20000
FIRST_DAY = datetime.date(2009, 1, 1).toordinal()
LAST_DAY = datetime.date(2012, 12, 31).toordinal()

SCHEMA_DDL = (
    "CREATE TABLE CUSTOMERS (CUSTOMERID CHAR(9) PRIMARY KEY, FIRSTNAME VARCHAR(16), "
    "LASTNAME VARCHAR(16), AGE INT, INCOME INT)",
    "CREATE TABLE ORDERS (ORDERID INT PRIMARY KEY, CUSTOMERID CHAR(9), ORDERDATE INT)",
    "CREATE TABLE ORDERLINES (ORDERLINEID INT PRIMARY KEY, ORDERID INT, PROD_ID INT, "
    "QUANTITY INT, ORDERDATE INT)",
    "CREATE TABLE PRODUCTS (PROD_ID INT PRIMARY KEY, TITLE VARCHAR(32), PRICE INT)",
)

# policy-file form of the schema above
SCHEMA_DOC = {
    "CUSTOMERS": {"CUSTOMERID": "CHAR(9) PRIMARY KEY", "FIRSTNAME": "VARCHAR(16)",
                  "LASTNAME": "VARCHAR(16)", "AGE": "INT", "INCOME": "INT"},
    "ORDERS": {"ORDERID": "INT PRIMARY KEY", "CUSTOMERID": "CHAR(9)", "ORDERDATE": "INT"},
    "ORDERLINES": {"ORDERLINEID": "INT PRIMARY KEY", "ORDERID": "INT", "PROD_ID": "INT",
                   "QUANTITY": "INT", "ORDERDATE": "INT"},
    "PRODUCTS": {"PROD_ID": "INT PRIMARY KEY", "TITLE": "VARCHAR(32)", "PRICE": "INT"},
}


@dataclass(frozen=True)
class DatasetSpec:
    seed: int = 42
    customers: int = 10_000
    orders_per_customer: int = 2  # mean
    lines_per_order: int = 3  # mean
    products: int = 500
    income_range: tuple = (20_001, 150_000)
    age_range: tuple = (18, 90)
    low_income_fraction: float = 0.01  # share with INCOME <= 20000
    function_fraction: float = 0.005  # share with INCOME = AGE * 1000

    def validate(self):
        if self.customers < 1:
            raise ValueError("customers must be at least 1")
        if self.orders_per_customer < 0 or self.lines_per_order < 1 or self.products < 1:
            raise ValueError("orders_per_customer >= 0, lines_per_order >= 1, products >= 1")
        lo, hi = self.income_range
        if not LOW_INCOME_LIMIT < lo <= hi:
            raise ValueError(f"income_range must lie above {LOW_INCOME_LIMIT}")
        a_lo, a_hi = self.age_range
        if not 0 < a_lo <= a_hi:
            raise ValueError("age_range must be positive")
        if not 0 <= self.low_income_fraction + self.function_fraction <= 1:
            raise ValueError("fractions must sum to at most 1")


def _date(rng: random.Random) -> int:
    d = datetime.date.fromordinal(rng.randint(FIRST_DAY, LAST_DAY))
    return d.year * 10000 + d.month * 100 + d.day


def _around(rng: random.Random, mean: int, minimum: int) -> int:
    """Uniform on [minimum, 2*mean - minimum], so the mean is ``mean``."""
    return rng.randint(minimum, max(minimum, 2 * mean - minimum))


def generate(spec: DatasetSpec = DatasetSpec()) -> Database:
    spec.validate()
    rng = random.Random(spec.seed)
    n = spec.customers
    n_low = round(n * spec.low_income_fraction)
    n_func = round(n * spec.function_fraction)
    kinds = ["low"] * n_low + ["func"] * n_func + ["normal"] * (n - n_low - n_func)
    rng.shuffle(kinds)

    ids = [f"{i + 1:09d}" for i in range(n)]
    ids[rng.randrange(n)] = SPECIAL_CUSTOMER
    a_lo, a_hi = spec.age_range
    customers = []
    for cid, kind in zip(ids, kinds):
        if kind == "func":
            # AGE * 1000 must stay clear of the low-income band
            age = rng.randint(max(a_lo, LOW_INCOME_LIMIT // 1000 + 1), max(a_hi, 21))
            income = age * 1000
        else:
            age = rng.randint(a_lo, a_hi)
            if kind == "low":
                income = rng.randint(1_000, LOW_INCOME_LIMIT)
            else:
                income = rng.randint(*spec.income_range)
                if income == age * 1000:
                    income += 1
        customers.append((cid, rng.choice(FIRSTNAMES), rng.choice(LASTNAMES), age, income))

    products = [(pid, f"{rng.choice(ADJECTIVES)} {rng.choice(NOUNS)} {pid}",
                 rng.randint(199, 4999)) for pid in range(1, spec.products + 1)]

    orders, lines = [], []
    oid = lid = 0
    for cid, *_ in customers:
        for _ in range(_around(rng, spec.orders_per_customer, 0)):
            oid += 1
            date = _date(rng)
            orders.append((oid, cid, date))
            for _ in range(_around(rng, spec.lines_per_order, 1)):
                lid += 1
                lines.append((lid, oid, rng.randint(1, spec.products), rng.randint(1, 10), date))

    db = Database()
    for ddl, rows in zip(SCHEMA_DDL, (customers, orders, lines, products)):
        stmt = parse(ddl)
        db.tables[stmt.name.upper()] = Table(stmt.name, stmt.columns, rows)
    return db


def digest(db: Database) -> str:
    """SHA-256 over the canonical JSON snapshot."""
    text = json.dumps(db.to_doc(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def spec_doc(spec: DatasetSpec) -> dict:
    return asdict(spec)


def plain_ddl() -> list:
    return [parse(s) for s in SCHEMA_DDL]


