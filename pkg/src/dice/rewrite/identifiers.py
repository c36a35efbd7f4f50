"""Identifier encryption with a reversible escape into valid SQL identifiers.

Encoding of the cipher output, applied character by character:

* ASCII letters and digits are copied.
* ``_`` becomes ``__``.
* Any other character becomes ``_x`` followed by its code point as six
  lowercase hex digits.

Then, if the result starts with a digit it gets the prefix ``_d``; if it is
(case-insensitively) a reserved word it gets the prefix ``_k``.  Decoding undoes
these steps in reverse.  A passthrough identifier cipher skips the escape
entirely, so the null cipher is the identity.
"""
from __future__ import annotations

import re

from dice.cipherkit import IDENTIFIER_CONTEXT, Cipher
from dice.errors import DecryptFailure
from dice.sqlkit.lexer import KEYWORDS

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def is_identifier(name: str) -> bool:
    return bool(_IDENT.match(name)) and name.upper() not in KEYWORDS


def escape(text: str) -> str:
    out = []
    for ch in text:
        if ch.isascii() and ch.isalnum():
            out.append(ch)
        elif ch == "_":
            out.append("__")
        else:
            out.append(f"_x{ord(ch):06x}")
    s = "".join(out)
    if s[:1].isdigit():
        s = "_d" + s
    elif s.upper() in KEYWORDS:
        s = "_k" + s
    return s


def unescape(name: str) -> str:
    if name.startswith(("_d", "_k")):
        name = name[2:]
    out = []
    i = 0
    while i < len(name):
        ch = name[i]
        if ch != "_":
            out.append(ch)
            i += 1
        elif name.startswith("__", i):
            out.append("_")
            i += 2
        elif name.startswith("_x", i) and re.fullmatch(r"[0-9a-f]{6}", name[i + 2:i + 8]):
            out.append(chr(int(name[i + 2:i + 8], 16)))
            i += 8
        else:
            raise DecryptFailure(f"{name!r} is not an encoded identifier")
    return "".join(out)


def _cipher_of(policy_or_cipher) -> Cipher:
    return getattr(policy_or_cipher, "identifier", policy_or_cipher)


def encrypt_identifier(policy_or_cipher, name: str) -> str:
    cipher = _cipher_of(policy_or_cipher)
    if cipher.is_passthrough:
        return name
    return escape(cipher.encrypt(name, IDENTIFIER_CONTEXT))


def decrypt_identifier(policy_or_cipher, name: str) -> str:
    cipher = _cipher_of(policy_or_cipher)
    if cipher.is_passthrough:
        return name
    plain = cipher.decrypt(unescape(name), IDENTIFIER_CONTEXT)
    if not isinstance(plain, str) or not _IDENT.match(plain):
        raise DecryptFailure(f"{name!r} does not decrypt to an identifier")
    return plain
