"""Identity, Caesar and keyed monoalphabetic substitution ciphers."""
from __future__ import annotations

import struct

from dice.errors import DecryptFailure, InvalidFormat

from .base import Cipher
from .prf import CoinStream
from .spec import DEFAULT_CONTEXT, ColumnContext

WILDCARDS = "%_"


class NullCipher(Cipher):
    kind = "null"

    def accepts(self, value):
        return True

    def _encrypt(self, value, ctx):
        return value

    def _decrypt(self, value, ctx):
        return value

    def _transform_pattern(self, pattern, ctx):
        return pattern


def _map_chars(text: str, table: dict) -> str:
    return "".join(table.get(ch, ch) for ch in text)


def _map_pattern(pattern: str, table: dict) -> str:
    return "".join(ch if ch in WILDCARDS else table.get(ch, ch) for ch in pattern)


class _Monoalphabetic(Cipher):
    def _tables(self, ctx) -> tuple[dict, dict]:
        raise NotImplementedError

    def _encrypt(self, value, ctx):
        return _map_chars(value, self._tables(ctx)[0])

    def _decrypt(self, value, ctx):
        if not isinstance(value, str):
            raise DecryptFailure(f"{self.kind} ciphertext must be text, got {value!r}")
        return _map_chars(value, self._tables(ctx)[1])

    def _transform_pattern(self, pattern, ctx):
        return _map_pattern(pattern, self._tables(ctx)[0])


class CaesarCipher(_Monoalphabetic):
    """Rotation by ``shift`` positions within the alphabet; other characters pass through."""

    kind = "caesar"

    def __init__(self, spec):
        super().__init__(spec)
        a, n, s = spec.alphabet, len(spec.alphabet), spec.shift
        enc = {a[i]: a[(i + s) % n] for i in range(n)}
        self._enc = enc
        self._dec = {v: k for k, v in enc.items()}

    def _tables(self, ctx):
        return self._enc, self._dec


def keyed_permutation(key: bytes, alphabet: str, ctx: ColumnContext) -> str:
    """Fisher-Yates shuffle of ``alphabet`` driven by a keyed coin stream.

    Coins: CoinStream(key, "dice-subst-v1" || ctx).  For i = n-1 down to 1,
    j = uniform integer in [0, i] drawn as a uint32 with rejection above the
    largest multiple of (i + 1); swap positions i and j.
    """
    coins = CoinStream(key, b"dice-subst-v1" + ctx.to_bytes())
    perm = list(alphabet)
    for i in range(len(perm) - 1, 0, -1):
        bound = i + 1
        limit = (1 << 32) - ((1 << 32) % bound)
        while True:
            (u,) = struct.unpack(">I", coins.read(4))
            if u < limit:
                break
        j = u % bound
        perm[i], perm[j] = perm[j], perm[i]
    return "".join(perm)


class SubstitutionCipher(_Monoalphabetic):
    """alphabet[k] -> shuffled[k], where shuffled is a keyed permutation per context."""

    kind = "substitution"

    def __init__(self, spec):
        super().__init__(spec)
        self._cache: dict[ColumnContext, tuple[dict, dict]] = {}

    def permutation(self, ctx: ColumnContext = DEFAULT_CONTEXT) -> str:
        return keyed_permutation(self.spec.key, self.spec.alphabet, ctx)

    def _tables(self, ctx):
        tables = self._cache.get(ctx)
        if tables is None:
            shuffled = self.permutation(ctx)
            enc = dict(zip(self.spec.alphabet, shuffled))
            tables = (enc, {v: k for k, v in enc.items()})
            self._cache[ctx] = tables
        return tables


def caesar_transform(cipher: CaesarCipher, text: str, direction: str = "enc") -> str:
    if direction == "enc":
        return cipher.encrypt(text)
    if direction == "dec":
        return cipher.decrypt(text)
    raise InvalidFormat(f"direction must be 'enc' or 'dec', got {direction!r}")


def substitution_transform(cipher: SubstitutionCipher, text: str, direction: str = "enc",
                           ctx: ColumnContext = DEFAULT_CONTEXT) -> str:
    if direction == "enc":
        return cipher.encrypt(text, ctx)
    if direction == "dec":
        return cipher.decrypt(text, ctx)
    raise InvalidFormat(f"direction must be 'enc' or 'dec', got {direction!r}")


def like_pattern_transform(cipher: Cipher, pattern: str, ctx: ColumnContext = DEFAULT_CONTEXT) -> str:
    return cipher.transform_pattern(pattern, ctx)
