from __future__ import annotations

from dice.errors import InvalidFormat, UnsupportedCapability

from .spec import DEFAULT_CONTEXT, Capability, CipherSpec, ColumnContext


class Cipher:
    """Keyed, deterministic value transformer.

    ``None`` (SQL NULL) passes through every cipher untouched.  Subclasses
    implement ``_encrypt``/``_decrypt`` for non-null values only.
    """

    kind = "abstract"

    def __init__(self, spec: CipherSpec):
        self.spec = spec

    @property
    def capabilities(self) -> Capability:
        return self.spec.capabilities

    def has(self, cap: Capability) -> bool:
        return bool(self.capabilities & cap)

    @property
    def is_passthrough(self) -> bool:
        return self.has(Capability.PASSTHROUGH)

    def accepts(self, value) -> bool:
        kind = "int" if isinstance(value, int) else "text"
        return kind in self.spec.value_kinds

    def _check(self, value):
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise InvalidFormat(f"unsupported value type {type(value).__name__}")
        if not self.accepts(value):
            want = "/".join(sorted(self.spec.value_kinds))
            raise InvalidFormat(f"{self.kind} cipher accepts {want} values, got {value!r}")

    def encrypt(self, value, ctx: ColumnContext = DEFAULT_CONTEXT):
        if value is None:
            return None
        self._check(value)
        return self._encrypt(value, ctx)

    def decrypt(self, value, ctx: ColumnContext = DEFAULT_CONTEXT):
        if value is None:
            return None
        return self._decrypt(value, ctx)

    def decrypt_many(self, values: list, ctx: ColumnContext = DEFAULT_CONTEXT) -> list:
        """Decrypt a column of values; ciphers with a cheaper batch path override this."""
        return [self.decrypt(v, ctx) for v in values]

    def transform_pattern(self, pattern: str, ctx: ColumnContext = DEFAULT_CONTEXT) -> str:
        """Encrypt a LIKE pattern, leaving the wildcards '%' and '_' in place."""
        if not self.has(Capability.LIKE_PATTERN):
            raise UnsupportedCapability(f"{self.kind} cipher cannot transform LIKE patterns")
        return self._transform_pattern(pattern, ctx)

    def _transform_pattern(self, pattern, ctx):
        raise UnsupportedCapability(self.kind)

    def _encrypt(self, value, ctx):
        raise NotImplementedError

    def _decrypt(self, value, ctx):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec.describe()}>"
