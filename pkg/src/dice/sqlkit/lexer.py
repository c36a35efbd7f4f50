from __future__ import annotations

import re
from dataclasses import dataclass

from dice.errors import ParseError

KEYWORDS = frozenset("""
    SELECT DISTINCT FROM WHERE GROUP BY HAVING ORDER ASC DESC LIMIT INNER JOIN ON AS
    AND OR NOT BETWEEN LIKE IN IS NULL INSERT INTO VALUES UPDATE SET DELETE CREATE TABLE
    DROP PRIMARY KEY BEGIN COMMIT ROLLBACK COUNT MIN MAX SUM AVG INT INTEGER BIGINT
    VARCHAR CHAR TRANSACTION
""".split())

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>'(?:[^']|'')*')
  | (?P<op><>|!=|<=|>=|[=<>+\-*/(),.;])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # KEYWORD, IDENT, INT, STRING, OP, EOF
    value: object
    line: int
    column: int

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        if self.kind == "STRING":
            return f"string '{self.value}'"
        return repr(str(self.value))


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            if text[pos] == "'":
                raise ParseError("unterminated string literal", line, col)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "ws":
            nl = raw.count("\n")
            if nl:
                line += nl
                line_start = pos + raw.rindex("\n") + 1
        elif kind == "ident":
            up = raw.upper()
            if up in KEYWORDS:
                tokens.append(Token("KEYWORD", up, line, col))
            else:
                tokens.append(Token("IDENT", raw, line, col))
        elif kind == "int":
            tokens.append(Token("INT", int(raw), line, col))
        elif kind == "string":
            body = raw[1:-1].replace("''", "'")
            nl = raw.count("\n")
            tokens.append(Token("STRING", body, line, col))
            if nl:
                line += nl
                line_start = pos + raw.rindex("\n") + 1
        else:
            tokens.append(Token("OP", "<>" if raw == "!=" else raw, line, col))
        pos = m.end()
    tokens.append(Token("EOF", None, line, pos - line_start + 1))
    return tokens


_CHUNK = re.compile(r"'(?:[^']|'')*'?|[^';]+|;")


def split_statements(text: str) -> tuple[list[str], str]:
    """Cut a script at semicolons outside string literals.

    Returns the complete statements (without the ``;``) and the unterminated
    rest, which the REPL keeps buffering.
    """
    out, buf = [], []
    for m in _CHUNK.finditer(text):
        if m.group() == ";":
            stmt = "".join(buf).strip()
            if stmt:
                out.append(stmt)
            buf = []
        else:
            buf.append(m.group())
    return out, "".join(buf).strip()
