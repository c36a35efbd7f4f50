"""Property-preserving ciphers behind one keyed-transformer contract."""
from dice.errors import InvalidSpec

from .base import Cipher
from .classic import (CaesarCipher, NullCipher, SubstitutionCipher, caesar_transform,
                      keyed_permutation, like_pattern_transform, substitution_transform)
from .detblock import DetBlockCipher, det_decrypt, det_encrypt
from .ff1 import FF1, Ff1Cipher, ff1_decrypt, ff1_encrypt
from .ope import OpeCipher, hgd_inverse_cdf, hgd_sample, ope_decrypt, ope_encrypt
from .spec import (DEFAULT_CONTEXT, IDENTIFIER_CONTEXT, KINDS, UPPER, UPPER_DIGITS, Capability,
                   CipherSpec, ColumnContext)

_CLASSES = {
    "null": NullCipher,
    "caesar": CaesarCipher,
    "substitution": SubstitutionCipher,
    "ope": OpeCipher,
    "ff1": Ff1Cipher,
    "detblock": DetBlockCipher,
}


def make_cipher(spec: CipherSpec) -> Cipher:
    spec.validate()
    try:
        return _CLASSES[spec.kind](spec)
    except KeyError:
        raise InvalidSpec(f"unknown cipher kind {spec.kind!r}") from None


__all__ = [
    "Capability", "Cipher", "CipherSpec", "ColumnContext", "DEFAULT_CONTEXT", "FF1",
    "IDENTIFIER_CONTEXT", "KINDS", "UPPER", "UPPER_DIGITS", "CaesarCipher", "DetBlockCipher",
    "Ff1Cipher", "NullCipher", "OpeCipher", "SubstitutionCipher", "caesar_transform",
    "det_decrypt", "det_encrypt", "ff1_decrypt", "ff1_encrypt", "hgd_inverse_cdf",
    "hgd_sample", "keyed_permutation", "like_pattern_transform", "make_cipher",
    "ope_decrypt", "ope_encrypt", "substitution_transform",
]
