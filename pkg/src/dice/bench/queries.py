"""The nine evaluation queries, adapted to the harness schema.

Adaptations against the published listings:

* dates are integers ``yyyymmdd``, so ``'2010-12-30'`` becomes ``20101230``;
* the LIKE pattern is cut off in the source; ``'S%'`` is used;
* ``QUANITY`` is read as ``QUANTITY``;
* ``HAVING ORDERDATE > '15-12-2017'`` is not valid over a grouped query and
  lies outside the data range; it becomes ``HAVING MAX(O.ORDERDATE) > 20111215``.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BenchQuery:
    name: str
    title: str
    sql: str
    original: str
    ordered: bool = False  # compare results order-sensitively


QUERIES = (
    BenchQuery("simple", "Simple Query with Projection",
               "SELECT C.FIRSTNAME, C.LASTNAME FROM CUSTOMERS C WHERE C.CUSTOMERID = '123456789'",
               "SELECT C.FIRSTNAME, C.LASTNAME FROM CUSTOMERS C "
               "WHERE C.CUSTOMERID = '123456789'"),
    BenchQuery("join", "Query with Join",
               "SELECT DISTINCT C.FIRSTNAME, C.LASTNAME FROM CUSTOMERS C INNER JOIN ORDERS O "
               "ON C.CUSTOMERID = O.CUSTOMERID WHERE O.ORDERDATE > 20101230",
               "SELECT DISTINCT C.FIRSTNAME, C.LASTNAME FROM CUSTOMERS C INNER JOIN ORDERS O "
               "ON C.CUSTOMERID = O.CUSTOMERID WHERE O.ORDERDATE > '2010-12-30'"),
    BenchQuery("orderby", "Query with Order by",
               "SELECT FIRSTNAME,LASTNAME,AGE FROM CUSTOMERS C ORDER BY C.AGE LIMIT 5",
               "SELECT FIRSTNAME,LASTNAME,AGE FROM CUSTOMERS C ORDER BY C.AGE LIMIT 5",
               ordered=True),
    BenchQuery("where", "Query with Where clause",
               "SELECT * FROM CUSTOMERS C WHERE C.INCOME < 20001",
               "SELECT * FROM CUSTOMERS C WHERE C.INCOME < 20001"),
    BenchQuery("between", "Query with Between",
               "SELECT count(*) FROM CUSTOMERS C WHERE C.INCOME BETWEEN 30000 AND 40000",
               "SELECT count(*) FROM CUSTOMERS C WHERE C.INCOME BETWEEN 30000 AND 40000"),
    BenchQuery("like", "Query with Like",
               "SELECT * FROM CUSTOMERS C WHERE C.LASTNAME LIKE 'S%'",
               "SELECT * FROM CUSTOMERS C WHERE C.LASTNAME LIKE '"),
    BenchQuery("aggregate", "Query with Aggregate",
               "SELECT MAX(C.INCOME) FROM CUSTOMERS C",
               "SELECT MAX(C.INCOME) FROM CUSTOMERS C"),
    BenchQuery("function", "Query with Functions",
               "SELECT * FROM CUSTOMERS C WHERE C.INCOME = C.AGE * 1000",
               "SELECT * FROM CUSTOMERS C WHERE C.INCOME = C.AGE * 1000"),
    BenchQuery("groupby", "Query with Group by, having",
               "SELECT SUM(O.QUANTITY) FROM ORDERLINES O GROUP BY PROD_ID "
               "HAVING MAX(O.ORDERDATE) > 20111215",
               "SELECT SUM(O.QUANITY) FROM ORDERLINES O GROUP BY PROD_ID "
               "HAVING ORDERDATE > '15-12-2017'"),
)

BY_NAME = {q.name: q for q in QUERIES}


def query(name: str) -> BenchQuery:
    try:
        return BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown query {name!r}; choose from {', '.join(BY_NAME)}") from None
