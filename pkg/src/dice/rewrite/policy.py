"""Encryption policies: which cipher protects which column, and the identifiers.

A policy document is YAML (JSON works too, being a YAML subset)::

    master_key: 00112233445566778899aabbccddeeff     # hex, >= 16 bytes
    identifier_cipher: {kind: caesar, shift: 3}
    default: {kind: caesar, shift: 3}                 # or defaults: {text: ..., int: ...}
    columns:
      CUSTOMERS.INCOME: {kind: ope, domain_bits: 32, range_bits: 48}
    domains:
      CUSTOMERID: [CUSTOMERS.CUSTOMERID, ORDERS.CUSTOMERID]
    tables:
      CUSTOMERS:
        CUSTOMERID: CHAR(9) PRIMARY KEY
        INCOME: INT

``dice_cipher_class`` and ``dice_shift`` are accepted as synonyms of ``kind``
and ``shift``.  A cipher may also be written as a bare kind name.
"""
from __future__ import annotations

import dataclasses
import threading
from pathlib import Path

import yaml

from dice.cipherkit import (IDENTIFIER_CONTEXT, UPPER, UPPER_DIGITS, Cipher, CipherSpec,
                            ColumnContext, make_cipher)
from dice.cipherkit.prf import derive_key
from dice.cipherkit.spec import KEYED_KINDS, KINDS
from dice.errors import InvalidSpec, PolicyError
from dice.sqlkit import ast
from dice.sqlkit.parser import Parser

from .identifiers import decrypt_identifier, encrypt_identifier, is_identifier

ALPHABETS = {"upper": UPPER, "upper_digits": UPPER_DIGITS, "digits": "0123456789"}

# Class names as the original driver's configuration might spell them.
_KIND_ALIASES = {
    "nullcipher": "null", "dummy": "null", "none": "null",
    "caesarcipher": "caesar", "rotating": "caesar",
    "substitutioncipher": "substitution",
    "opecipher": "ope", "jope": "ope",
    "ff1cipher": "ff1", "fpe": "ff1",
    "aes": "detblock", "aescipher": "detblock", "aes-ecb": "detblock",
}
_SPEC_KEYS = {"kind", "dice_cipher_class", "shift", "dice_shift", "alphabet", "domain_bits",
              "range_bits", "radix"}
IDENTIFIER_KINDS = ("null", "caesar", "substitution", "detblock")
_DOC_KEYS = {"master_key", "identifier_cipher", "default", "cipher", "defaults", "columns",
             "domains", "tables"}


def spec_from_doc(doc) -> CipherSpec:
    """Unkeyed cipher template from its document form."""
    if isinstance(doc, str):
        doc = {"kind": doc}
    if not isinstance(doc, dict):
        raise PolicyError(f"cipher must be a mapping or a kind name, got {doc!r}")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise PolicyError(f"unknown cipher option(s): {', '.join(sorted(unknown))}")
    raw = doc.get("kind", doc.get("dice_cipher_class"))
    if raw is None:
        raise PolicyError("cipher needs a kind")
    kind = str(raw).strip().lower()
    kind = _KIND_ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise PolicyError(f"unknown cipher kind {raw!r}")
    alphabet = doc.get("alphabet", "upper")
    alphabet = ALPHABETS.get(str(alphabet).lower(), str(alphabet))
    try:
        spec = CipherSpec(kind=kind, shift=int(doc.get("shift", doc.get("dice_shift", 0))),
                          alphabet=alphabet,
                          domain_bits=int(doc.get("domain_bits", 32)),
                          range_bits=int(doc.get("range_bits", 48)),
                          radix=int(doc.get("radix", 10)))
        dataclasses.replace(spec, key=bytes(32)).validate()
    except (TypeError, ValueError) as exc:
        raise PolicyError(f"bad cipher options {doc!r}: {exc}") from exc
    except InvalidSpec as exc:
        raise PolicyError(str(exc)) from exc
    return spec


def spec_to_doc(spec: CipherSpec) -> dict:
    d = {"kind": spec.kind}
    if spec.kind in ("caesar", "substitution"):
        if spec.kind == "caesar":
            d["shift"] = spec.shift
        names = {v: k for k, v in ALPHABETS.items()}
        d["alphabet"] = names.get(spec.alphabet, spec.alphabet)
    if spec.kind == "ope":
        d["domain_bits"] = spec.domain_bits
        d["range_bits"] = spec.range_bits
    return d


def value_kind(ctype: ast.ColumnType) -> str:
    return "text" if ctype.is_text else "int"


def parse_table_doc(name: str, cols) -> ast.CreateTable:
    if not isinstance(cols, dict) or not cols:
        raise PolicyError(f"table {name} needs a mapping of column -> type")
    defs = []
    for cname, tname in cols.items():
        p = Parser(f"{cname} {tname}")
        try:
            col = p.column_def()
            p.expect_eof()
        except Exception as exc:
            raise PolicyError(f"bad column {name}.{cname}: {exc}") from exc
        defs.append(col)
    if sum(c.type.primary_key for c in defs) > 1:
        raise PolicyError(f"table {name} declares more than one primary key")
    if len({c.name.upper() for c in defs}) != len(defs):
        raise PolicyError(f"table {name} declares a column twice")
    return ast.CreateTable(str(name), tuple(defs))


def _split_column(key: str) -> tuple[str, str]:
    t, sep, c = str(key).partition(".")
    if not sep or not t or not c:
        raise PolicyError(f"column key {key!r} must look like TABLE.COLUMN")
    return t, c


class EncryptionPolicy:
    """Immutable after construction apart from an internal cipher cache."""

    def __init__(self, master_key: bytes = b"", identifier: CipherSpec | None = None,
                 default_text: CipherSpec | None = None, default_int: CipherSpec | None = None,
                 columns: dict | None = None, domains: dict | None = None,
                 tables: tuple = (), source: str = "<memory>"):
        self.master_key = master_key
        self.default_text = default_text or CipherSpec("null")
        self.default_int = default_int or CipherSpec("null")
        self.columns = {(t.upper(), c.upper()): s for (t, c), s in (columns or {}).items()}
        self.domains = {(t.upper(), c.upper()): d for (t, c), d in (domains or {}).items()}
        self.tables = tuple(tables)
        self.source = source
        self._cache: dict = {}
        self._lock = threading.Lock()
        ident = identifier or CipherSpec("null")
        if ident.kind not in IDENTIFIER_KINDS:
            raise PolicyError(f"{ident.kind} cannot encrypt identifiers "
                              f"(use one of {', '.join(IDENTIFIER_KINDS)})")
        self.identifier_spec = self._keyed(ident, IDENTIFIER_CONTEXT)
        self.identifier: Cipher = make_cipher(self.identifier_spec)
        self._check_tables()

    # -- cipher selection ------------------------------------------------

    def _keyed(self, template: CipherSpec, ctx: ColumnContext) -> CipherSpec:
        if template.kind not in KEYED_KINDS:
            return template
        if len(self.master_key) < 16:
            raise PolicyError(f"{template.kind} needs master_key (hex, at least 16 bytes)")
        return dataclasses.replace(template, key=derive_key(self.master_key, template.kind,
                                                            ctx.to_bytes()))

    def template_for(self, table: str, column: str, ctype: ast.ColumnType) -> CipherSpec:
        kind = value_kind(ctype)
        spec = self.columns.get((table.upper(), column.upper()))
        if spec is not None:
            if kind not in spec.value_kinds:
                raise PolicyError(f"{spec.kind} cannot encrypt {kind} column {table}.{column} "
                                  f"({ctype.sql()})")
            return spec
        spec = self.default_text if kind == "text" else self.default_int
        # a default that cannot handle this type leaves the column in the clear
        return spec if kind in spec.value_kinds else CipherSpec("null")

    def context_for(self, table: str, column: str) -> ColumnContext:
        domain = self.domains.get((table.upper(), column.upper()))
        return ColumnContext.domain(domain) if domain else ColumnContext(table.upper(),
                                                                         column.upper())

    def column_cipher(self, table: str, column: str, ctype: ast.ColumnType):
        """(cipher, context, domain) for one column."""
        template = self.template_for(table, column, ctype)
        ctx = self.context_for(table, column)
        spec = self._keyed(template, ctx)
        with self._lock:
            cipher = self._cache.get(spec)
            if cipher is None:
                cipher = self._cache[spec] = make_cipher(spec)
        return cipher, ctx, self.domains.get((table.upper(), column.upper()))

    @property
    def is_null(self) -> bool:
        """True when nothing at all is encrypted: statements can pass through verbatim."""
        return (self.identifier.is_passthrough and self.default_text.kind == "null"
                and self.default_int.kind == "null"
                and all(s.kind == "null" for s in self.columns.values()))

    # -- identifiers -----------------------------------------------------

    def encrypt_identifier(self, name: str) -> str:
        return encrypt_identifier(self.identifier, name)

    def decrypt_identifier(self, name: str) -> str:
        return decrypt_identifier(self.identifier, name)

    def check_identifiers(self, tables) -> None:
        """Injectivity and round trip over the given CREATE TABLE statements."""
        seen_t: dict = {}
        seen_c: dict = {}
        for t in tables:
            names = [(t.name, seen_t, "table")] + [(c.name, seen_c, "column") for c in t.columns]
            for name, seen, what in names:
                enc = self.encrypt_identifier(name)
                if not is_identifier(enc) and not self.identifier.is_passthrough:
                    raise PolicyError(f"encrypted {what} name {enc!r} is not an identifier")
                if self.decrypt_identifier(enc) != name:
                    raise PolicyError(f"identifier {name!r} does not round-trip")
                other = seen.get(enc.upper())
                if other is not None and other.upper() != name.upper():
                    raise PolicyError(f"{what} names {other!r} and {name!r} encrypt to the "
                                      f"same identifier {enc!r}")
                if what == "table" and other is not None:
                    raise PolicyError(f"table {name!r} is declared twice (as {other!r})")
                seen[enc.upper()] = name

    def _check_tables(self):
        self.check_identifiers(self.tables)
        declared = {t.name.upper(): t for t in self.tables}
        templates = [self.default_text, self.default_int, *self.columns.values()]
        if len(self.master_key) < 16 and any(s.kind in KEYED_KINDS for s in templates):
            raise PolicyError("keyed ciphers need master_key (hex, at least 16 bytes)")
        for t in self.tables:
            for c in t.columns:
                self.column_cipher(t.name, c.name, c.type)
        for (tname, cname) in list(self.columns) + list(self.domains):
            t = declared.get(tname)
            if t is not None and not any(c.name.upper() == cname for c in t.columns):
                raise PolicyError(f"policy names unknown column {tname}.{cname}")
        by_domain: dict = {}
        for (tname, cname), dom in self.domains.items():
            t = declared.get(tname)
            col = next((c for c in t.columns if c.name.upper() == cname), None) if t else None
            if col is None:
                continue
            sig = (self.template_for(tname, cname, col.type), value_kind(col.type))
            first = by_domain.setdefault(dom, ((tname, cname), sig))
            if first[1] != sig:
                raise PolicyError(f"domain {dom}: {tname}.{cname} and "
                                  f"{first[0][0]}.{first[0][1]} use different ciphers or types")

    def describe(self) -> str:
        lines = [f"identifier cipher: {self.identifier_spec.describe()}",
                 f"default text cipher: {self.default_text.describe()}",
                 f"default int cipher: {self.default_int.describe()}"]
        for (t, c), s in sorted(self.columns.items()):
            lines.append(f"column {t}.{c}: {s.describe()}")
        return "\n".join(lines)


def policy_from_doc(doc: dict, source: str = "<memory>") -> EncryptionPolicy:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise PolicyError("policy document must be a mapping")
    unknown = set(doc) - _DOC_KEYS
    if unknown:
        raise PolicyError(f"unknown policy key(s): {', '.join(sorted(unknown))}")
    key_hex = doc.get("master_key", "")
    try:
        master = bytes.fromhex(str(key_hex)) if key_hex else b""
    except ValueError as exc:
        raise PolicyError("master_key must be hex") from exc
    if master and len(master) < 16:
        raise PolicyError("master_key must be at least 16 bytes")

    default_doc = doc.get("default", doc.get("cipher"))
    default = spec_from_doc(default_doc) if default_doc is not None else CipherSpec("null")
    defaults = doc.get("defaults") or {}
    if not isinstance(defaults, dict) or set(defaults) - {"text", "int"}:
        raise PolicyError("defaults must be a mapping with keys text and/or int")
    d_text = spec_from_doc(defaults["text"]) if "text" in defaults else default
    d_int = spec_from_doc(defaults["int"]) if "int" in defaults else default

    if "identifier_cipher" in doc:
        ident = spec_from_doc(doc["identifier_cipher"])
    elif default.kind in IDENTIFIER_KINDS:
        ident = default
    else:
        ident = CipherSpec("null")

    columns = {}
    for key, sdoc in (doc.get("columns") or {}).items():
        columns[_split_column(key)] = spec_from_doc(sdoc)
    domains = {}
    for dom, members in (doc.get("domains") or {}).items():
        if not isinstance(members, list):
            raise PolicyError(f"domain {dom} must list TABLE.COLUMN entries")
        for m in members:
            tc = _split_column(m)
            if (tc[0].upper(), tc[1].upper()) in {(a.upper(), b.upper()) for a, b in domains}:
                raise PolicyError(f"{m} belongs to more than one domain")
            domains[tc] = str(dom)
    tables = tuple(parse_table_doc(name, cols) for name, cols in (doc.get("tables") or {}).items())
    return EncryptionPolicy(master, ident, d_text, d_int, columns, domains, tables, source)


def policy_from_text(text: str, origin: str = "<string>") -> EncryptionPolicy:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise PolicyError(f"policy {origin} does not parse: {exc}") from exc
    return policy_from_doc(doc, origin)


def load_policy(source) -> EncryptionPolicy:
    """Load from a file path, or pass through a parsed mapping or policy object."""
    if isinstance(source, EncryptionPolicy):
        return source
    if isinstance(source, dict) or source is None:
        return policy_from_doc(source)
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise PolicyError(f"cannot read policy {source}: {exc}") from exc
    return policy_from_text(text, str(source))


def null_policy(tables=()) -> EncryptionPolicy:
    return EncryptionPolicy(tables=tuple(tables), source="<null>")


def policy_to_doc(policy: EncryptionPolicy) -> dict:
    doc = {}
    if policy.master_key:
        doc["master_key"] = policy.master_key.hex()
    doc["identifier_cipher"] = spec_to_doc(dataclasses.replace(policy.identifier_spec, key=b""))
    doc["defaults"] = {"text": spec_to_doc(policy.default_text),
                       "int": spec_to_doc(policy.default_int)}
    if policy.columns:
        doc["columns"] = {f"{t}.{c}": spec_to_doc(s) for (t, c), s in policy.columns.items()}
    if policy.domains:
        groups: dict = {}
        for (t, c), d in policy.domains.items():
            groups.setdefault(d, []).append(f"{t}.{c}")
        doc["domains"] = groups
    if policy.tables:
        doc["tables"] = {t.name: {c.name: c.type.sql() for c in t.columns} for t in policy.tables}
    return doc
