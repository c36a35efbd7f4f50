"""Plaintext <-> ciphertext schema mapping and column type widening."""
from __future__ import annotations

from dataclasses import dataclass

from dice.cipherkit import Capability, Cipher, CipherSpec, ColumnContext
from dice.cipherkit.detblock import ciphertext_hex_len
from dice.errors import IncompatibleType, SchemaError
from dice.sqlkit import ast

from .policy import EncryptionPolicy, value_kind

# Ciphers whose output does not depend on the column context.
_CONTEXT_FREE = ("null", "caesar")


def widen_type(plain: ast.ColumnType, spec: CipherSpec) -> ast.ColumnType:
    """Smallest column type that holds every ciphertext of a ``plain`` column."""
    kind = value_kind(plain)
    if kind not in spec.value_kinds:
        raise IncompatibleType(f"{spec.kind} cannot encrypt {plain.sql()}")
    pk = plain.primary_key
    if spec.kind == "ope":
        return ast.ColumnType("BIGINT", None, pk)
    if spec.kind == "detblock":
        payload = 8 if kind == "int" else plain.length
        return ast.ColumnType("VARCHAR", ciphertext_hex_len(payload), pk)
    return plain


@dataclass(frozen=True, eq=False)
class ColumnInfo:
    table: str
    name: str
    cipher_name: str
    plain_type: ast.ColumnType
    wide_type: ast.ColumnType
    cipher: Cipher
    ctx: ColumnContext
    domain: str | None = None

    @property
    def kind(self) -> str:
        return self.cipher.kind

    @property
    def passthrough(self) -> bool:
        return self.cipher.is_passthrough

    def has(self, cap: Capability) -> bool:
        return self.cipher.has(cap)

    @property
    def join_token(self):
        """Equal tokens mean equal plaintexts have equal ciphertexts in both columns."""
        if self.passthrough:
            return ("null",)
        spec = self.cipher.spec
        return (spec,) if spec.kind in _CONTEXT_FREE else (spec, self.ctx)

    @property
    def qualified(self) -> str:
        return f"{self.table}.{self.name}"


@dataclass(frozen=True, eq=False)
class TableInfo:
    name: str
    cipher_name: str
    columns: tuple

    def column(self, name: str) -> ColumnInfo:
        for c in self.columns:
            if c.name.upper() == name.upper():
                return c
        raise SchemaError(f"unknown column {self.name}.{name}")

    def has_column(self, name: str) -> bool:
        return any(c.name.upper() == name.upper() for c in self.columns)

    @property
    def primary_key(self) -> ColumnInfo | None:
        return next((c for c in self.columns if c.plain_type.primary_key), None)

    def plain_ddl(self) -> ast.CreateTable:
        return ast.CreateTable(self.name, tuple(ast.ColumnDef(c.name, c.plain_type)
                                                for c in self.columns))

    def cipher_ddl(self) -> ast.CreateTable:
        return ast.CreateTable(self.cipher_name, tuple(ast.ColumnDef(c.cipher_name, c.wide_type)
                                                       for c in self.columns))


class SchemaMap:
    """Immutable; DDL produces a new map via ``with_table``/``without_table``."""

    def __init__(self, policy: EncryptionPolicy, tables=()):
        self.policy = policy
        self._tables = {t.name.upper(): t for t in tables}
        self._by_cipher = {t.cipher_name.upper(): t for t in tables}

    @property
    def tables(self) -> list:
        return list(self._tables.values())

    def table(self, name: str) -> TableInfo:
        t = self._tables.get(name.upper())
        if t is None:
            raise SchemaError(f"unknown table {name}")
        return t

    def has_table(self, name: str) -> bool:
        return name.upper() in self._tables

    def by_cipher_name(self, name: str) -> TableInfo:
        t = self._by_cipher.get(name.upper())
        if t is None:
            raise SchemaError(f"no table is stored as {name}")
        return t

    def table_info(self, ddl: ast.CreateTable) -> TableInfo:
        p = self.policy
        cols = []
        for c in ddl.columns:
            cipher, ctx, domain = p.column_cipher(ddl.name, c.name, c.type)
            wide = widen_type(c.type, cipher.spec)
            cols.append(ColumnInfo(ddl.name, c.name, p.encrypt_identifier(c.name), c.type, wide,
                                   cipher, ctx, domain))
        return TableInfo(ddl.name, p.encrypt_identifier(ddl.name), tuple(cols))

    def with_table(self, ddl: ast.CreateTable) -> "SchemaMap":
        if self.has_table(ddl.name):
            raise SchemaError(f"table {ddl.name} already exists")
        self.policy.check_identifiers([t.plain_ddl() for t in self.tables] + [ddl])
        return SchemaMap(self.policy, self.tables + [self.table_info(ddl)])

    def without_table(self, name: str) -> "SchemaMap":
        self.table(name)
        return SchemaMap(self.policy, [t for t in self.tables if t.name.upper() != name.upper()])


def build_schema(policy: EncryptionPolicy, extra_ddl=()) -> SchemaMap:
    schema = SchemaMap(policy)
    for ddl in list(policy.tables) + list(extra_ddl):
        if not schema.has_table(ddl.name):
            schema = schema.with_table(ddl)
    return schema
