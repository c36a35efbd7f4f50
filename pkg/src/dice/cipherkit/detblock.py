"""Deterministic AES-128 in codebook mode, hex-encoded.

Serialization before encryption (all integers big-endian):

    tag      1 byte   0x01 = Int64, 0x02 = Text
    length   8 bytes  payload length in bytes
    payload           Int64: 8-byte two's complement; Text: UTF-8

The buffer is zero-padded to a multiple of 16 bytes, so ciphertext length is
16 * ceil((len(payload) + 9) / 16) bytes, i.e. twice that in hex characters.
"""
from __future__ import annotations

import struct

from cryptography.hazmat.primitives.ciphers import Cipher as _AES
from cryptography.hazmat.primitives.ciphers import algorithms, modes

from dice.errors import DecryptFailure, InvalidFormat

from .base import Cipher
from .prf import prf

TAG_INT = 1
TAG_TEXT = 2
HEADER = 9
BLOCK = 16
INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1


def serialize(value) -> bytes:
    if isinstance(value, int):
        if not INT64_MIN <= value <= INT64_MAX:
            raise InvalidFormat(f"{value} does not fit in Int64")
        payload = struct.pack(">q", value)
        tag = TAG_INT
    else:
        payload = value.encode("utf-8")
        tag = TAG_TEXT
    raw = struct.pack(">BQ", tag, len(payload)) + payload
    return raw + bytes(-len(raw) % BLOCK)


def deserialize(raw: bytes):
    if len(raw) < HEADER or len(raw) % BLOCK:
        raise DecryptFailure("ciphertext has a bad length")
    tag, length = struct.unpack(">BQ", raw[:HEADER])
    end = HEADER + length
    if end > len(raw) or any(raw[end:]) or len(raw) - end >= BLOCK:
        raise DecryptFailure("bad padding")
    payload = raw[HEADER:end]
    if tag == TAG_INT:
        if length != 8:
            raise DecryptFailure("bad Int64 payload length")
        return struct.unpack(">q", payload)[0]
    if tag == TAG_TEXT:
        try:
            return payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecryptFailure("text payload is not UTF-8") from exc
    raise DecryptFailure(f"unknown value tag {tag}")


def ciphertext_hex_len(payload_bytes: int) -> int:
    return 2 * BLOCK * -(-(payload_bytes + HEADER) // BLOCK)


class DetBlockCipher(Cipher):
    kind = "detblock"

    def __init__(self, spec):
        super().__init__(spec)
        self._aes: dict = {}

    def _cipher_for(self, ctx):
        aes = self._aes.get(ctx)
        if aes is None:
            subkey = prf(self.spec.key, b"dice-detblock-v1" + ctx.to_bytes())[:16]
            aes = _AES(algorithms.AES(subkey), modes.ECB())
            self._aes[ctx] = aes
        return aes

    def _encrypt(self, value, ctx):
        enc = self._cipher_for(ctx).encryptor()
        return (enc.update(serialize(value)) + enc.finalize()).hex()

    def _decrypt(self, value, ctx):
        if not isinstance(value, str):
            raise DecryptFailure(f"detblock ciphertext must be hex text, got {value!r}")
        try:
            raw = bytes.fromhex(value)
        except ValueError as exc:
            raise DecryptFailure("ciphertext is not hex") from exc
        if not raw or len(raw) % BLOCK:
            raise DecryptFailure("ciphertext has a bad length")
        dec = self._cipher_for(ctx).decryptor()
        return deserialize(dec.update(raw) + dec.finalize())


def det_encrypt(cipher: DetBlockCipher, value, ctx):
    return cipher.encrypt(value, ctx)


def det_decrypt(cipher: DetBlockCipher, value, ctx):
    return cipher.decrypt(value, ctx)
