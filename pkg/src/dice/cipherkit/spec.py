from __future__ import annotations

import enum
import string
import struct
from dataclasses import dataclass, field

from dice.errors import InvalidSpec

UPPER = string.ascii_uppercase
UPPER_DIGITS = string.ascii_uppercase + string.digits

KINDS = ("null", "caesar", "substitution", "ope", "ff1", "detblock")
KEYED_KINDS = ("substitution", "ope", "ff1", "detblock")


class Capability(enum.Flag):
    NONE = 0
    EQUALITY = enum.auto()
    ORDER = enum.auto()
    LIKE_PATTERN = enum.auto()
    FORMAT_PRESERVING = enum.auto()
    PASSTHROUGH = enum.auto()

    @classmethod
    def all(cls) -> "Capability":
        return (cls.EQUALITY | cls.ORDER | cls.LIKE_PATTERN
                | cls.FORMAT_PRESERVING | cls.PASSTHROUGH)


CAPABILITIES = {
    "null": Capability.all(),
    "caesar": Capability.EQUALITY | Capability.LIKE_PATTERN | Capability.FORMAT_PRESERVING,
    "substitution": Capability.EQUALITY | Capability.LIKE_PATTERN | Capability.FORMAT_PRESERVING,
    "ope": Capability.EQUALITY | Capability.ORDER,
    "ff1": Capability.EQUALITY | Capability.FORMAT_PRESERVING,
    "detblock": Capability.EQUALITY,
}

# Which plaintext value kinds each cipher accepts.
VALUE_KINDS = {
    "null": frozenset({"int", "text"}),
    "caesar": frozenset({"text"}),
    "substitution": frozenset({"text"}),
    "ope": frozenset({"int"}),
    "ff1": frozenset({"text"}),
    "detblock": frozenset({"int", "text"}),
}


@dataclass(frozen=True)
class ColumnContext:
    """Domain-separation input for column-bound encryption."""

    table: str
    column: str

    def to_bytes(self) -> bytes:
        t = self.table.encode("utf-8")
        c = self.column.encode("utf-8")
        return struct.pack(">H", len(t)) + t + struct.pack(">H", len(c)) + c

    @classmethod
    def domain(cls, name: str) -> "ColumnContext":
        # '#' never occurs in identifiers, so domain contexts cannot collide with tables.
        return cls("#domain", name)


IDENTIFIER_CONTEXT = ColumnContext("#ident", "#ident")
DEFAULT_CONTEXT = ColumnContext("#default", "#default")


@dataclass(frozen=True)
class CipherSpec:
    kind: str
    key: bytes = b""
    shift: int = 0
    alphabet: str = UPPER
    domain_bits: int = 32
    range_bits: int = 48
    radix: int = 10
    extra: tuple = field(default=(), compare=False)

    @property
    def capabilities(self) -> Capability:
        return CAPABILITIES[self.kind]

    @property
    def value_kinds(self) -> frozenset:
        return VALUE_KINDS[self.kind]

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown cipher kind {self.kind!r}")
        if self.kind in KEYED_KINDS and len(self.key) < 16:
            raise InvalidSpec(f"{self.kind} needs a key of at least 16 bytes, got {len(self.key)}")
        if self.kind in ("caesar", "substitution"):
            if not self.alphabet:
                raise InvalidSpec("alphabet must not be empty")
            if len(set(self.alphabet)) != len(self.alphabet):
                raise InvalidSpec("alphabet has duplicate characters")
            if "%" in self.alphabet or "_" in self.alphabet:
                raise InvalidSpec("alphabet must not contain the LIKE wildcards '%' or '_'")
        if self.kind == "caesar" and not 0 <= self.shift < len(self.alphabet):
            raise InvalidSpec(f"shift {self.shift} outside [0, {len(self.alphabet)})")
        if self.kind == "ope":
            if not 1 <= self.domain_bits < self.range_bits <= 62:
                raise InvalidSpec(
                    f"ope needs 1 <= domain_bits < range_bits <= 62, "
                    f"got d={self.domain_bits} r={self.range_bits}")
        if self.kind == "ff1":
            if self.radix != 10:
                raise InvalidSpec("ff1 supports radix 10 only")
            if len(self.key) not in (16, 24, 32):
                raise InvalidSpec("ff1 key must be 16, 24 or 32 bytes")

    def describe(self) -> str:
        if self.kind == "caesar":
            return f"caesar(shift={self.shift})"
        if self.kind == "ope":
            return f"ope(d={self.domain_bits},r={self.range_bits})"
        return self.kind
