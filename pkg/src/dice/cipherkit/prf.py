"""Keyed pseudorandom streams and key derivation.

Every byte produced here is specified exactly (docs/ciphers.md) so that golden
vectors stay stable across platforms and releases.
"""
from __future__ import annotations

import hashlib
import hmac
import struct


def prf(key: bytes, message: bytes) -> bytes:
    return hmac.digest(key, message, hashlib.sha256)


def derive_key(master: bytes, label: str, context: bytes = b"", length: int = 32) -> bytes:
    """HMAC-SHA256(master, "dice-kdf-v1" || 0x00 || label || 0x00 || context), truncated."""
    if length > 32:
        raise ValueError("derive_key yields at most 32 bytes")
    msg = b"dice-kdf-v1\x00" + label.encode("utf-8") + b"\x00" + context
    return prf(master, msg)[:length]


class CoinStream:
    """Infinite byte stream: block i = HMAC-SHA256(key, seed || uint32_be(i))."""

    __slots__ = ("_key", "_seed", "_counter", "_buf")

    def __init__(self, key: bytes, seed: bytes):
        self._key = key
        self._seed = seed
        self._counter = 0
        self._buf = b""

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            self._buf += prf(self._key, self._seed + struct.pack(">I", self._counter))
            self._counter += 1
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def bits(self, k: int) -> int:
        """Uniform integer in [0, 2**k), from ceil(k/8) big-endian bytes with high bits masked."""
        if k <= 0:
            return 0
        nbytes = (k + 7) // 8
        v = int.from_bytes(self.read(nbytes), "big")
        return v & ((1 << k) - 1)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection sampling on bit_length(bound - 1) bits."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        if bound == 1:
            return 0
        k = (bound - 1).bit_length()
        while True:
            v = self.bits(k)
            if v < bound:
                return v

    def uniform(self) -> float:
        """Double in [0, 1) from the top 53 bits of 8 bytes."""
        return (int.from_bytes(self.read(8), "big") >> 11) * (1.0 / (1 << 53))
