"""Tokeniser for protocol files and the core type syntax."""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..core.errors import Diagnostic, DiagnosticError, Span

KEYWORDS = {
    "global", "protocol", "aux", "role", "choice", "at", "or", "from", "to", "do",
    "mu", "end", "true", "false", "type", "not",
}

# Longest symbols first so that the alternation prefers them.
SYMBOLS = [
    ":=", "->", "<=", ">=", "==", "<>", "!=", "&&", "||", "/\\", "\\/",
    "(", ")", "{", "}", "[", "]", ",", ";", ":", ".", "<", ">", "=", "+", "-", "*", "!", "?", "@", "^", "|",
]

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<line>//[^\n]*)|(?P<block>/\*.*?\*/)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)|(?P<int>[0-9]+)"
    r"|(?P<sym>" + "|".join(re.escape(s) for s in SYMBOLS) + ")",
    re.S,
)

ALIASES = {"==": "=", "!=": "<>", "/\\": "&&", "\\/": "||"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident, kw, int, sym, eof
    text: str
    line: int
    col: int

    @property
    def span(self) -> Span:
        return Span(self.line, self.col)


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            if text.startswith("/*", pos):
                raise DiagnosticError([Diagnostic("LexError", "unterminated comment", Span(line, col))])
            raise DiagnosticError([Diagnostic("LexError", f"unexpected character {text[pos]!r}", Span(line, col))])
        kind = m.lastgroup
        s = m.group()
        if kind == "ident":
            if s.startswith("_"):
                raise DiagnosticError([Diagnostic(
                    "LexError", f"identifiers may not start with an underscore: {s}", Span(line, col))])
            out.append(Token("kw" if s in KEYWORDS else "ident", s, line, col))
        elif kind == "int":
            out.append(Token("int", s, line, col))
        elif kind == "sym":
            out.append(Token("sym", ALIASES.get(s, s), line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rfind("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    out.append(Token("eof", "", line, col))
    return out
