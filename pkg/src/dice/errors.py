"""Exception hierarchy shared by every layer of the proxy.

The CLI maps each class to a stable exit code (see ``EXIT_CODES``).
"""


class DiceError(Exception):
    """Base class for all errors raised by this package."""


# -- cipherkit ---------------------------------------------------------------

class CipherError(DiceError):
    pass


class InvalidSpec(CipherError):
    pass


class OutOfDomain(CipherError):
    pass


class InvalidFormat(CipherError):
    pass


class DecryptFailure(CipherError):
    pass


class NotInImage(DecryptFailure):
    pass


class UnsupportedCapability(CipherError):
    pass


# -- sqlkit ------------------------------------------------------------------

class ParseError(DiceError):
    """Syntax error with a 1-based position and the set of tokens expected there."""

    def __init__(self, message, line=1, column=1, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at line {line}, column {column}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


# -- rewrite -----------------------------------------------------------------

class PolicyError(DiceError):
    pass


class SchemaError(DiceError):
    """A statement references a table or column the schema map does not know."""


class AmbiguousBinding(DiceError):
    pass


class IncompatibleType(DiceError):
    pass


class CapabilityError(DiceError):
    """Strict mode refused a statement that would need naive evaluation."""


class Unsupported(DiceError):
    pass


# -- backend -----------------------------------------------------------------

class ExecError(DiceError):
    pass


class TypeMismatch(ExecError):
    pass


class IoError(DiceError, OSError):
    pass


class BindError(IoError):
    pass


class RemoteError(DiceError):
    """The backend answered a request with an error frame."""

    def __init__(self, message, kind="ExecError"):
        self.kind = kind
        super().__init__(message)


# -- bench -------------------------------------------------------------------

class BenchMismatch(DiceError):
    """Results differed across modes; timings are withheld."""


class WorkloadError(DiceError):
    """A workload transaction failed; the run is aborted."""


EXIT_CODES = {
    "DiceError": 1,
    "ParseError": 3,
    "CapabilityError": 4,
    "PolicyError": 5,
    "IoError": 6,
    "BindError": 6,
    "RemoteError": 7,
    "DecryptFailure": 8,
    "ExecError": 9,
    "TypeMismatch": 9,
    "SchemaError": 10,
    "AmbiguousBinding": 11,
    "Unsupported": 12,
    "IncompatibleType": 13,
    "BenchMismatch": 14,
    "InvalidSpec": 15,
    "OutOfDomain": 16,
    "NotInImage": 8,
    "InvalidFormat": 17,
    "UnsupportedCapability": 18,
    "WorkloadError": 19,
}


def exit_code_for(exc):
    for cls in type(exc).__mro__:
        if cls.__name__ in EXIT_CODES:
            return EXIT_CODES[cls.__name__]
    return 1
