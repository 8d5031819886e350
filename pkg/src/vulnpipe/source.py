"""Statement-level source model for the supported C subset.

Parsing splits token streams into ordered, attributed statements at ';',
'{' and '}' boundaries, with control headers (if/for/while/switch) as
standalone statements. Function boundaries, formal parameters, and
security-relevant call sites are recorded on top of that model.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .lexer import (
    BUILTIN_TYPEDEFS,
    IDENTIFIER,
    KEYWORD,
    PUNCTUATION,
    TYPE_KEYWORDS,
    Token,
    lex,
    strip_directives,
)

log = logging.getLogger(__name__)

# Statement attributes.
DEFINITION = "Definition"
ASSIGNMENT = "Assignment"
CONTROL = "Control"
RETURN = "Return"
EXPRESSION = "Expression"
OTHER = "Other"

_CONTROL_STARTERS = ("if", "for", "while", "switch", "else")
_OTHER_STARTERS = ("break", "continue", "goto", "case", "default", "do")

_ASSIGN_OPS = frozenset(
    ("=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=")
)


@dataclass
class Statement:
    id: int
    line: int
    tokens: tuple[Token, ...]
    attribute: str
    contains_call: bool
    enclosing_function: str | None
    control_parent: int | None = None
    branch: str = ""  # "then" / "else" when nested under an if header

    def text(self) -> str:
        return " ".join(t.text for t in self.tokens)


@dataclass
class Param:
    name: str
    by_ref: bool  # pointer or array formal


@dataclass
class FunctionUnit:
    name: str
    params: list[Param]
    statements: list[Statement]
    header_line: int


@dataclass
class Program:
    path: str
    functions: list[FunctionUnit] = field(default_factory=list)
    statements: list[Statement] = field(default_factory=list)  # all, source order
    issues: list[str] = field(default_factory=list)

    def statement_by_id(self, sid: int) -> Statement:
        stmt = self._by_id().get(sid)
        if stmt is None:
            raise KeyError(f"no statement with id {sid}")
        return stmt

    def _by_id(self) -> dict[int, Statement]:
        cached = getattr(self, "_id_cache", None)
        if cached is None or len(cached) != len(self.statements):
            cached = {s.id: s for s in self.statements}
            self._id_cache = cached
        return cached

    @property
    def global_statements(self) -> list[Statement]:
        return [s for s in self.statements if s.enclosing_function is None]


@dataclass
class CallOccurrence:
    callee: Token
    index: int  # token index of the callee within its statement
    arg_positions: list[list[Token]]  # identifier tokens per argument slot


@dataclass
class CallSite:
    statement: Statement
    callee: str
    callee_token: Token
    args: tuple[Token, ...]  # ordered, de-duplicated argument identifiers
    arg_positions: list[list[Token]]
    index_in_statement: int  # 1-based among all calls in the statement

    @property
    def arg_texts(self) -> tuple[str, ...]:
        return tuple(t.text for t in self.args)


def _is_type_start(tokens: tuple[Token, ...] | list[Token]) -> bool:
    t0 = tokens[0]
    if t0.kind == KEYWORD and t0.text in TYPE_KEYWORDS:
        return True
    if t0.kind == IDENTIFIER and t0.text in BUILTIN_TYPEDEFS and len(tokens) > 1:
        nxt = tokens[1]
        return nxt.kind == IDENTIFIER or nxt.text == "*"
    return False


def _top_level_assign_index(tokens) -> int:
    depth = 0
    for i, t in enumerate(tokens):
        if t.text in ("(", "["):
            depth += 1
        elif t.text in (")", "]"):
            depth -= 1
        elif depth == 0 and t.kind == "operator" and t.text in _ASSIGN_OPS:
            return i
    return -1


@dataclass
class Declarator:
    name: str
    by_ref: bool


def declarators(tokens) -> list[Declarator]:
    """Declared names (with pointer/array flag) of a definition-shaped statement.

    Splits at top-level commas; within each chunk the declared name is the
    first identifier outside brackets/parens of the declarator part (before
    that chunk's '='), skipping struct/union/enum tags.
    """
    toks = list(tokens)
    if toks and toks[-1].text == ";":
        toks = toks[:-1]
    chunks: list[list[Token]] = [[]]
    depth = 0
    for t in toks:
        if t.text in ("(", "[", "{"):
            depth += 1
        elif t.text in (")", "]", "}"):
            depth -= 1
        if t.text == "," and depth == 0:
            chunks.append([])
        else:
            chunks[-1].append(t)
    out: list[Declarator] = []
    skip_tag = False
    for ci, chunk in enumerate(chunks):
        if ci == 0:
            skip_tag = any(
                t.kind == KEYWORD and t.text in ("struct", "union", "enum") for t in chunk[:3]
            )
        eq = _top_level_assign_index(chunk)
        decl_part = chunk if eq == -1 else chunk[:eq]
        depth = 0
        by_ref = any(t.text in ("*", "[") for t in decl_part)
        tag_pending = skip_tag and ci == 0
        name = None
        for j, t in enumerate(decl_part):
            if t.text in ("(", "["):
                depth += 1
                continue
            if t.text in (")", "]"):
                depth -= 1
                continue
            if depth > 0 and t.text != "*":
                # function-pointer declarators: "( * cb )" names live at depth 1
                if t.kind == IDENTIFIER and j > 0 and decl_part[j - 1].text == "*" and name is None:
                    name = t.text
                continue
            if t.kind == IDENTIFIER and t.text not in BUILTIN_TYPEDEFS:
                if tag_pending and decl_part[j - 1].text in ("struct", "union", "enum"):
                    tag_pending = False
                    continue
                name = t.text
                break
        if name is not None:
            out.append(Declarator(name, by_ref))
    return out


def declared_identifiers(tokens) -> list[str]:
    return [d.name for d in declarators(tokens)]


def _match_paren(tokens, open_idx: int) -> int:
    """Index of the ')' matching tokens[open_idx] == '(' (or len-1 fallback)."""
    depth = 0
    for j in range(open_idx, len(tokens)):
        if tokens[j].text == "(":
            depth += 1
        elif tokens[j].text == ")":
            depth -= 1
            if depth == 0:
                return j
    return len(tokens) - 1


def iter_calls(tokens) -> list[CallOccurrence]:
    """All invocation occurrences in one statement's tokens, in source order.

    An occurrence is an identifier (or the sizeof keyword) immediately
    followed by '(' that is being invoked, not declared: inside the
    declarator part of a definition-shaped statement, ident '(' is a
    declaration and is skipped.
    """
    toks = list(tokens)
    decl_end = -1
    if toks and _is_type_start(toks):
        eq = _top_level_assign_index(toks)
        decl_end = len(toks) if eq == -1 else eq
    out: list[CallOccurrence] = []
    for i, t in enumerate(toks):
        if i + 1 >= len(toks) or toks[i + 1].text != "(":
            continue
        if not (t.kind == IDENTIFIER or (t.kind == KEYWORD and t.text == "sizeof")):
            continue
        if i < decl_end:
            continue
        close = _match_paren(toks, i + 1)
        positions: list[list[Token]] = [[]]
        depth = 0
        for j in range(i + 2, close):
            tj = toks[j]
            if tj.text in ("(", "["):
                depth += 1
            elif tj.text in (")", "]"):
                depth -= 1
            if tj.text == "," and depth == 0:
                positions.append([])
                continue
            if tj.kind != IDENTIFIER:
                continue
            if j + 1 < close and toks[j + 1].text == "(":
                continue  # nested callee name
            if j > 0 and toks[j - 1].text in (".", "->"):
                continue  # struct member name
            positions[-1].append(tj)
        if positions == [[]]:
            positions = []
        out.append(CallOccurrence(callee=t, index=i, arg_positions=positions))
    return out


def classify_statement(tokens) -> tuple[str, bool]:
    """Attribute and call flag for one statement's token sequence."""
    if not tokens:
        raise ValueError("empty statement")
    contains_call = bool(iter_calls(tokens))
    t0 = tokens[0]
    if t0.kind == KEYWORD and t0.text in _CONTROL_STARTERS:
        return CONTROL, contains_call
    if t0.kind == KEYWORD and t0.text == "return":
        return RETURN, contains_call
    if _is_type_start(tokens) and declared_identifiers(tokens):
        return DEFINITION, contains_call
    if _top_level_assign_index(tokens) != -1:
        return ASSIGNMENT, contains_call
    if t0.kind == KEYWORD and t0.text in _OTHER_STARTERS:
        return OTHER, contains_call
    if all(t.kind in (PUNCTUATION, KEYWORD) for t in tokens):
        return OTHER, contains_call
    return EXPRESSION, contains_call


class _Parser:
    def __init__(self, tokens: list[Token], path: str):
        self.toks = tokens
        self.i = 0
        self.program = Program(path=path)
        self.next_id = 1
        self.current_function: str | None = None
        self.current_statements: list[Statement] | None = None

    # -- token helpers -------------------------------------------------
    def _peek(self, k: int = 0) -> Token | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def _at_end(self) -> bool:
        return self.i >= len(self.toks)

    def _issue(self, msg: str, line: int) -> None:
        self.program.issues.append(f"{self.program.path}:{line}: {msg}")

    # -- statement emission --------------------------------------------
    def _emit(self, chunk: list[Token], parent: int | None, branch: str) -> Statement | None:
        if not chunk:
            return None
        attribute, has_call = classify_statement(chunk)
        stmt = Statement(
            id=self.next_id,
            line=chunk[0].line,
            tokens=tuple(chunk),
            attribute=attribute,
            contains_call=has_call,
            enclosing_function=self.current_function,
            control_parent=parent,
            branch=branch,
        )
        self.next_id += 1
        self.program.statements.append(stmt)
        if self.current_statements is not None:
            self.current_statements.append(stmt)
        return stmt

    # -- generic chunk: consume until top-level ';' ---------------------
    def _consume_simple(self) -> list[Token]:
        chunk: list[Token] = []
        depth = 0
        while not self._at_end():
            t = self.toks[self.i]
            if t.text == "(" or t.text == "[":
                depth += 1
            elif t.text == ")" or t.text == "]":
                depth = max(0, depth - 1)
            elif t.text == "{" and depth == 0:
                if _top_level_assign_index(chunk) != -1 or (
                    chunk and chunk[0].text in ("struct", "union", "enum", "typedef")
                ):
                    self._consume_brace_group(chunk)
                    continue
                break  # block start: let the caller handle it
            elif t.text == "}" and depth == 0:
                break
            chunk.append(t)
            self.i += 1
            if t.text == ";" and depth == 0:
                break
        return chunk

    def _consume_brace_group(self, chunk: list[Token]) -> None:
        depth = 0
        while not self._at_end():
            t = self.toks[self.i]
            chunk.append(t)
            self.i += 1
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
                if depth == 0:
                    return
        self._issue("unbalanced braces in initializer or type definition", chunk[0].line)

    # -- control structures ----------------------------------------------
    def _consume_header(self) -> list[Token]:
        """keyword + its parenthesized condition/clauses."""
        chunk = [self.toks[self.i]]
        self.i += 1
        t = self._peek()
        if t is not None and t.text == "(":
            close = _match_paren(self.toks, self.i)
            chunk.extend(self.toks[self.i : close + 1])
            self.i = close + 1
        return chunk

    def _parse_body(self, parent: int | None, branch: str) -> None:
        t = self._peek()
        if t is None:
            return
        if t.text == "{":
            self.i += 1
            self._parse_stmt_list(parent, branch, until_rbrace=True)
        elif t.text == ";":
            self.i += 1  # empty body
        else:
            self._parse_one(parent, branch)

    def _parse_one(self, parent: int | None, branch: str) -> None:
        t = self._peek()
        assert t is not None
        if t.kind == KEYWORD and t.text == "if":
            header = self._consume_header()
            stmt = self._emit(header, parent, branch)
            hid = stmt.id if stmt else parent
            self._parse_body(hid, "then")
            nxt = self._peek()
            if nxt is not None and nxt.text == "else":
                self.i += 1
                after = self._peek()
                if after is not None and after.text == "if":
                    self._parse_one(hid, "else")  # else-if chains under this header
                else:
                    self._parse_body(hid, "else")
            return
        if t.kind == KEYWORD and t.text in ("for", "while", "switch"):
            header = self._consume_header()
            nxt = self._peek()
            if t.text == "while" and nxt is not None and nxt.text == ";":
                self._emit(header, parent, branch)  # do-while tail
                self.i += 1
                return
            stmt = self._emit(header, parent, branch)
            hid = stmt.id if stmt else parent
            self._parse_body(hid, "then")
            return
        if t.kind == KEYWORD and t.text == "do":
            self._emit([t], parent, branch)
            self.i += 1
            self._parse_body(parent, branch)
            return
        if t.kind == KEYWORD and t.text in ("case", "default"):
            chunk = []
            while not self._at_end():
                tok = self.toks[self.i]
                chunk.append(tok)
                self.i += 1
                if tok.text == ":":
                    break
            self._emit(chunk, parent, branch)
            return
        if t.text == "{":
            self.i += 1
            self._parse_stmt_list(parent, branch, until_rbrace=True)
            return
        chunk = self._consume_simple()
        if chunk:
            self._emit(chunk, parent, branch)
        elif not self._at_end() and self.toks[self.i].text == "{":
            self.i += 1
            self._parse_stmt_list(parent, branch, until_rbrace=True)

    def _parse_stmt_list(self, parent: int | None, branch: str, until_rbrace: bool) -> None:
        while not self._at_end():
            t = self.toks[self.i]
            if t.text == "}":
                self.i += 1
                if until_rbrace:
                    return
                self._issue("unexpected '}'", t.line)
                continue
            self._parse_one(parent, branch)
        if until_rbrace:
            self._issue("unbalanced braces: missing '}'", self.toks[-1].line if self.toks else 1)

    # -- top level ---------------------------------------------------------
    def _function_name_and_params(self, header: list[Token]) -> tuple[str, list[Param]] | None:
        depth = 0
        open_idx = -1
        for j, t in enumerate(header):
            if t.text == "(":
                if depth == 0 and j > 0 and header[j - 1].kind == IDENTIFIER:
                    open_idx = j
                    break
                depth += 1
            elif t.text == ")":
                depth -= 1
        if open_idx <= 0:
            return None
        name = header[open_idx - 1].text
        close = _match_paren(header, open_idx)
        inner = header[open_idx + 1 : close]
        params: list[Param] = []
        chunk: list[Token] = []
        depth = 0
        for t in inner + [Token(",", PUNCTUATION, 0, 0)]:
            if t.text in ("(", "["):
                depth += 1
            elif t.text in (")", "]"):
                depth -= 1
            if t.text == "," and depth == 0:
                if chunk and not (len(chunk) == 1 and chunk[0].text == "void"):
                    pname = None
                    bdepth = 0
                    for k, ct in enumerate(chunk):
                        if ct.text == "[":
                            bdepth += 1
                        elif ct.text == "]":
                            bdepth -= 1
                        elif bdepth == 0 and ct.kind == IDENTIFIER and ct.text not in BUILTIN_TYPEDEFS:
                            if k > 0 and chunk[k - 1].text in ("struct", "union", "enum"):
                                continue
                            pname = ct.text
                    if pname:
                        by_ref = any(ct.text in ("*", "[") for ct in chunk)
                        params.append(Param(pname, by_ref))
                chunk = []
            else:
                chunk.append(t)
        return name, params

    def parse(self) -> Program:
        while not self._at_end():
            t = self.toks[self.i]
            if t.text == "}":
                self._issue("unexpected '}' at top level", t.line)
                self.i += 1
                continue
            if t.text == ";":
                self.i += 1
                continue
            start = self.i
            chunk = self._consume_simple()
            nxt = self._peek()
            if nxt is not None and nxt.text == "{" and chunk and chunk[-1].text == ")":
                named = self._function_name_and_params(chunk)
                if named is not None:
                    name, params = named
                    fn = FunctionUnit(
                        name=name, params=params, statements=[], header_line=chunk[0].line
                    )
                    self.program.functions.append(fn)
                    self.current_function = name
                    self.current_statements = fn.statements
                    self.i += 1  # consume '{'
                    self._parse_stmt_list(None, "", until_rbrace=True)
                    self.current_function = None
                    self.current_statements = None
                    continue
            if chunk:
                self._emit(chunk, None, "")
            elif self.i == start:
                self.i += 1  # safety: never stall
        return self.program


def parse_program(tokens: list[Token], path: str = "<memory>") -> Program:
    """Build the ordered statement model from a lexed token stream."""
    return _Parser(tokens, path).parse()


def parse_source(source: str, path: str = "<memory>") -> Program:
    """Convenience wrapper: strip directives, lex, and parse."""
    return parse_program(lex(strip_directives(source)), path)


def extract_call_sites(program: Program, security_functions) -> list[CallSite]:
    """One CallSite per occurrence of a listed callee, in source order.

    Multiple calls in one statement yield multiple call sites ordered by
    column. Argument identifiers come from inside the call parentheses
    (constants excluded, nested-call identifiers included).
    """
    wanted = set(security_functions)
    sites: list[CallSite] = []
    for stmt in program.statements:
        occurrences = iter_calls(stmt.tokens)
        for k, occ in enumerate(occurrences, start=1):
            if occ.callee.text not in wanted:
                continue
            seen: set[str] = set()
            flat: list[Token] = []
            for pos in occ.arg_positions:
                for tok in pos:
                    if tok.text not in seen:
                        seen.add(tok.text)
                        flat.append(tok)
            sites.append(
                CallSite(
                    statement=stmt,
                    callee=occ.callee.text,
                    callee_token=occ.callee,
                    args=tuple(flat),
                    arg_positions=occ.arg_positions,
                    index_in_statement=k,
                )
            )
    return sites


def load_security_functions(path) -> list[str]:
    """Newline-delimited function names; '#' starts a comment."""
    names: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            entry = raw.split("#", 1)[0].strip()
            if entry:
                names.append(entry)
    if not names:
        raise ValueError(f"security-function list {path} is empty")
    return names
