"""Tokenizer for the supported C subset.

Comments are consumed here; preprocessor directives are expected to be
stripped beforehand (see :func:`strip_directives`). Joining the emitted
token texts reproduces the non-comment, non-whitespace source content.
"""
from __future__ import annotations

from dataclasses import dataclass

KEYWORD = "keyword"
IDENTIFIER = "identifier"
CONSTANT = "constant"
OPERATOR = "operator"
PUNCTUATION = "punctuation"

C_KEYWORDS = frozenset(
    """
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Imaginary
    """.split()
)

TYPE_KEYWORDS = frozenset(
    "void char short int long float double signed unsigned _Bool "
    "struct union enum const static extern register volatile inline typedef".split()
)

# Standard typedef names we resolve so declarations like "size_t n;" classify
# and normalize the same way built-in types do.
BUILTIN_TYPEDEFS = frozenset(
    """
    size_t ssize_t ptrdiff_t wchar_t wint_t FILE va_list time_t clock_t
    int8_t int16_t int32_t int64_t uint8_t uint16_t uint32_t uint64_t
    intptr_t uintptr_t intmax_t uintmax_t bool sig_atomic_t fpos_t div_t
    ldiv_t
    """.split()
)

_PUNCT_CHARS = frozenset("()[]{};,")

_THREE_CHAR_OPS = ("<<=", ">>=", "...")
_TWO_CHAR_OPS = (
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "->",
)
_ONE_CHAR_OPS = frozenset("+-*/%=<>!&|^~?:.#")

_IDENT_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | frozenset("0123456789")
_DIGITS = frozenset("0123456789")


@dataclass(frozen=True)
class Token:
    text: str
    kind: str
    line: int
    column: int


class UnterminatedLiteral(ValueError):
    """Unclosed string, character literal, or block comment."""

    def __init__(self, what: str, line: int):
        super().__init__(f"unterminated {what} starting at line {line}")
        self.what = what
        self.line = line


def strip_directives(source: str) -> str:
    """Blank out preprocessor lines (#include, #define, ...) keeping line structure.

    Backslash-continued directive lines are blanked through the continuation.
    """
    out_lines = []
    in_directive = False
    for raw in source.splitlines():
        if in_directive:
            in_directive = raw.rstrip().endswith("\\")
            out_lines.append("")
            continue
        if raw.lstrip().startswith("#"):
            in_directive = raw.rstrip().endswith("\\")
            out_lines.append("")
        else:
            out_lines.append(raw)
    return "\n".join(out_lines)


def _scan_number(src: str, i: int) -> int:
    n = len(src)
    j = i
    if src[j] == "0" and j + 1 < n and src[j + 1] in "xX":
        j += 2
        while j < n and (src[j] in "0123456789abcdefABCDEF"):
            j += 1
    else:
        while j < n and src[j] in _DIGITS:
            j += 1
        if j < n and src[j] == ".":
            j += 1
            while j < n and src[j] in _DIGITS:
                j += 1
        if j < n and src[j] in "eE":
            k = j + 1
            if k < n and src[k] in "+-":
                k += 1
            if k < n and src[k] in _DIGITS:
                j = k
                while j < n and src[j] in _DIGITS:
                    j += 1
    while j < n and src[j] in "uUlLfF":
        j += 1
    return j


def _scan_quoted(src: str, i: int, quote: str, line: int) -> int:
    what = "string literal" if quote == '"' else "character literal"
    j = i + 1
    n = len(src)
    while j < n:
        c = src[j]
        if c == "\\":
            j += 2
            continue
        if c == "\n":
            break
        if c == quote:
            return j + 1
        j += 1
    raise UnterminatedLiteral(what, line)


def lex(source: str) -> list[Token]:
    """Tokenize C source into classified tokens with line/column positions."""
    tokens: list[Token] = []
    i = 0
    n = len(source)
    line = 1
    col = 1

    def advance_to(j: int) -> None:
        nonlocal i, line, col
        seg = source[i:j]
        nl = seg.count("\n")
        if nl:
            line += nl
            col = len(seg) - seg.rfind("\n")
        else:
            col += len(seg)
        i = j

    while i < n:
        c = source[i]
        if c in " \t\r\n\v\f":
            advance_to(i + 1)
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "/":
            j = source.find("\n", i)
            advance_to(n if j == -1 else j)
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "*":
            j = source.find("*/", i + 2)
            if j == -1:
                raise UnterminatedLiteral("block comment", line)
            advance_to(j + 2)
            continue
        start_line, start_col = line, col
        if c in _IDENT_START:
            j = i + 1
            while j < n and source[j] in _IDENT_CONT:
                j += 1
            text = source[i:j]
            kind = KEYWORD if text in C_KEYWORDS else IDENTIFIER
            tokens.append(Token(text, kind, start_line, start_col))
            advance_to(j)
            continue
        if c in _DIGITS or (c == "." and i + 1 < n and source[i + 1] in _DIGITS):
            j = _scan_number(source, i)
            tokens.append(Token(source[i:j], CONSTANT, start_line, start_col))
            advance_to(j)
            continue
        if c in "\"'":
            j = _scan_quoted(source, i, c, line)
            tokens.append(Token(source[i:j], CONSTANT, start_line, start_col))
            advance_to(j)
            continue
        if c in _PUNCT_CHARS:
            tokens.append(Token(c, PUNCTUATION, start_line, start_col))
            advance_to(i + 1)
            continue
        three = source[i : i + 3]
        if three in _THREE_CHAR_OPS:
            tokens.append(Token(three, OPERATOR, start_line, start_col))
            advance_to(i + 3)
            continue
        two = source[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(Token(two, OPERATOR, start_line, start_col))
            advance_to(i + 2)
            continue
        if c in _ONE_CHAR_OPS:
            tokens.append(Token(c, OPERATOR, start_line, start_col))
            advance_to(i + 1)
            continue
        # Unknown byte: keep it as punctuation so the round-trip property holds.
        tokens.append(Token(c, PUNCTUATION, start_line, start_col))
        advance_to(i + 1)
    return tokens


def render(tokens: list[Token] | tuple[Token, ...]) -> str:
    """Canonical single-line rendering: token texts joined by single spaces."""
    return " ".join(t.text for t in tokens)
