"""The cipher policies the suite and workload run under.

Every policy declares the benchmark schema and puts the join columns of each
pair of tables into a shared domain, so equal plaintexts encrypt equally on
both sides of a join.
"""
from __future__ import annotations

import copy

from dice.rewrite import EncryptionPolicy, policy_from_doc

from .datagen import SCHEMA_DOC

# fixed so that ciphertext snapshots are reproducible; never reuse outside the benchmark
BENCH_MASTER_KEY = "6469636562656e63686d61726b6b657931323334353637383930616263646566"

DOMAINS = {
    "CUSTOMERID": ["CUSTOMERS.CUSTOMERID", "ORDERS.CUSTOMERID"],
    "ORDERID": ["ORDERS.ORDERID", "ORDERLINES.ORDERID"],
    "PROD_ID": ["ORDERLINES.PROD_ID", "PRODUCTS.PROD_ID"],
}

_CAESAR_IDENT = {"kind": "caesar", "shift": 3, "alphabet": "upper"}

POLICY_DOCS = {
    "plain": {},
    "caesar": {
        "identifier_cipher": _CAESAR_IDENT,
        "defaults": {"text": {"kind": "caesar", "shift": 3, "alphabet": "upper_digits"},
                     "int": {"kind": "null"}},
    },
    "substitution": {
        "identifier_cipher": {"kind": "substitution", "alphabet": "upper"},
        "defaults": {"text": {"kind": "substitution", "alphabet": "upper_digits"},
                     "int": {"kind": "null"}},
    },
    "ope": {
        "identifier_cipher": {"kind": "detblock"},
        "defaults": {"text": {"kind": "detblock"}, "int": {"kind": "ope"}},
    },
    "ff1": {
        "identifier_cipher": {"kind": "detblock"},
        "defaults": {"text": {"kind": "null"}, "int": {"kind": "null"}},
        "columns": {"CUSTOMERS.CUSTOMERID": {"kind": "ff1"},
                    "ORDERS.CUSTOMERID": {"kind": "ff1"}},
    },
    "detblock": {
        "identifier_cipher": {"kind": "detblock"},
        "defaults": {"text": {"kind": "detblock"}, "int": {"kind": "detblock"}},
    },
}

CIPHERS = tuple(k for k in POLICY_DOCS if k != "plain")


def policy_doc(name: str) -> dict:
    """Full policy document (with schema, domains and key) for a named bench policy."""
    try:
        doc = copy.deepcopy(POLICY_DOCS[name])
    except KeyError:
        raise KeyError(f"unknown bench policy {name!r}; choose from "
                       f"{', '.join(POLICY_DOCS)}") from None
    doc["tables"] = copy.deepcopy(SCHEMA_DOC)
    if name != "plain":
        doc["master_key"] = BENCH_MASTER_KEY
        doc["domains"] = copy.deepcopy(DOMAINS)
    return doc


def bench_policy(name: str) -> EncryptionPolicy:
    return policy_from_doc(policy_doc(name), f"<bench:{name}>")
