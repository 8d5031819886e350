"""Canonical renaming of user-defined identifiers within a gadget.

Variables become varb_0, varb_1, ... and user-defined functions become
func_0, func_1, ... in first-appearance order over the gadget's ordered
statements. Reserved words, known library/API names, standard typedef
names, and constants stay verbatim, so two gadgets that differ only in
naming normalize to identical text.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .lexer import BUILTIN_TYPEDEFS, IDENTIFIER, Token
from .slicer import CodeGadget
from .source import CallSite, Statement


@dataclass
class SymbolMap:
    variable_map: dict[str, str] = field(default_factory=dict)
    function_map: dict[str, str] = field(default_factory=dict)

    def lookup(self, name: str) -> str | None:
        hit = self.function_map.get(name)
        return hit if hit is not None else self.variable_map.get(name)


def normalize_gadget(
    gadget: CodeGadget, known_library_functions
) -> tuple[CodeGadget, SymbolMap]:
    """Rename user identifiers; token order, counts and structure unchanged.

    An identifier keeps whichever replacement its first occurrence earned,
    even if it later appears in the other syntactic position.
    """
    preserved = set(known_library_functions) | BUILTIN_TYPEDEFS
    mapping = SymbolMap()

    def rename(tokens: tuple[Token, ...]) -> tuple[Token, ...]:
        out: list[Token] = []
        for i, t in enumerate(tokens):
            if t.kind != IDENTIFIER or t.text in preserved:
                out.append(t)
                continue
            repl = mapping.lookup(t.text)
            if repl is None:
                func_position = i + 1 < len(tokens) and tokens[i + 1].text == "("
                if func_position:
                    repl = f"func_{len(mapping.function_map)}"
                    mapping.function_map[t.text] = repl
                else:
                    repl = f"varb_{len(mapping.variable_map)}"
                    mapping.variable_map[t.text] = repl
            out.append(Token(repl, IDENTIFIER, t.line, t.column))
        return tuple(out)

    new_statements: list[Statement] = [
        replace(stmt, tokens=rename(stmt.tokens)) for stmt in gadget.statements
    ]
    by_id = {s.id: s for s in new_statements}

    site = gadget.call_site
    new_args = tuple(
        Token(mapping.lookup(t.text) or t.text, IDENTIFIER, t.line, t.column)
        for t in site.args
    )
    new_positions = [
        [Token(mapping.lookup(t.text) or t.text, IDENTIFIER, t.line, t.column) for t in pos]
        for pos in site.arg_positions
    ]
    new_site = CallSite(
        statement=by_id.get(site.statement.id, site.statement),
        callee=site.callee,
        callee_token=site.callee_token,
        args=new_args,
        arg_positions=new_positions,
        index_in_statement=site.index_in_statement,
    )
    normalized = CodeGadget(
        id=gadget.id,
        call_site=new_site,
        statements=new_statements,
        forward_part=gadget.forward_part,
        backward_part=gadget.backward_part,
        source_path=gadget.source_path,
    )
    return normalized, mapping
