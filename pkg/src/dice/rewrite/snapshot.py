"""Bulk conversion of whole databases between plaintext and ciphertext form."""
from __future__ import annotations

from dice.backend.engine import Database, Table
from dice.sqlkit import ast

from .rewriter import OpLog
from .schema import SchemaMap, build_schema


def _plain_ddl(table: Table) -> ast.CreateTable:
    return ast.CreateTable(table.name, tuple(table.columns))


def encrypt_database(policy, db: Database, ops: OpLog | None = None):
    """Encrypt every table of ``db``; returns ``(cipher_db, schema)``.

    Tables not declared in the policy get its default ciphers.
    """
    ops = ops if ops is not None else OpLog()
    schema = build_schema(policy, [_plain_ddl(t) for t in db.tables.values()])
    out = Database()
    for t in db.tables.values():
        info = schema.table(t.name)
        plans = [(i, c) for i, c in enumerate(info.columns) if not c.passthrough]
        rows = []
        for r in t.rows:
            cells = list(r)
            for i, c in plans:
                if cells[i] is not None:
                    cells[i] = c.cipher.encrypt(cells[i], c.ctx)
                    ops.encrypt_ops += 1
            rows.append(tuple(cells))
        ddl = info.cipher_ddl()
        out.tables[ddl.name.upper()] = Table(ddl.name, ddl.columns, rows)
    return out, schema


def decrypt_database(schema: SchemaMap, cipher_db: Database, ops: OpLog | None = None) -> Database:
    """Inverse of ``encrypt_database`` for every table the schema knows."""
    ops = ops if ops is not None else OpLog()
    out = Database()
    for info in schema.tables:
        t = cipher_db.tables.get(info.cipher_name.upper())
        if t is None:
            continue
        plans = [(i, c) for i, c in enumerate(info.columns) if not c.passthrough]
        rows = []
        for r in t.rows:
            cells = list(r)
            for i, c in plans:
                if cells[i] is not None:
                    cells[i] = c.cipher.decrypt(cells[i], c.ctx)
                    ops.decrypt_ops += 1
            rows.append(tuple(cells))
        ddl = info.plain_ddl()
        out.tables[ddl.name.upper()] = Table(ddl.name, ddl.columns, rows)
    return out
