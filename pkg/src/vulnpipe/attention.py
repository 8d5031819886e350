"""Syntax-rule extraction of the attention subset from a normalized gadget.

Three rules flag statements that carry type-discriminating signal:
r1 definitions of the call site's arguments, r2 control statements,
r3 statements containing any function call. Each statement is re-lexed
and re-classified from its normalized text before rule matching, so the
result depends only on the gadget text itself.
"""
from __future__ import annotations

from dataclasses import dataclass

from .lexer import lex
from .slicer import CodeGadget
from .source import CONTROL, DEFINITION, Statement, classify_statement, declared_identifiers

RULE_IDS = ("r1", "r2", "r3")


@dataclass(frozen=True)
class Rule:
    id: str
    description: str


DEFAULT_RULES = (
    Rule("r1", "definition statement declaring an argument of the call site"),
    Rule("r2", "control statement"),
    Rule("r3", "statement containing a library/API or other function call"),
)


class UnknownRule(ValueError):
    pass


def match_rule(statement: Statement, rule_id: str, call_args: set[str]) -> bool:
    if rule_id == "r1":
        return statement.attribute == DEFINITION and any(
            name in call_args for name in declared_identifiers(statement.tokens)
        )
    if rule_id == "r2":
        return statement.attribute == CONTROL
    if rule_id == "r3":
        return statement.contains_call
    raise UnknownRule(rule_id)


@dataclass
class CodeAttention:
    gadget_id: int
    statements: list[Statement]  # subset of the gadget, gadget order
    indices: list[int]  # 0-based positions within the gadget body
    matched_rules: list[set[str]]  # parallel to statements, each non-empty


def extract_attention(gadget: CodeGadget, rules=RULE_IDS) -> CodeAttention:
    """Statements of a normalized gadget matching any enabled rule."""
    rule_ids = tuple(r.id if isinstance(r, Rule) else r for r in rules)
    call_args = set(gadget.call_site.arg_texts)
    statements: list[Statement] = []
    indices: list[int] = []
    matched_rules: list[set[str]] = []
    for idx, stmt in enumerate(gadget.statements):
        tokens = tuple(lex(stmt.text()))
        attribute, has_call = classify_statement(tokens) if tokens else ("Other", False)
        probe = Statement(
            id=stmt.id,
            line=stmt.line,
            tokens=tokens,
            attribute=attribute,
            contains_call=has_call,
            enclosing_function=stmt.enclosing_function,
        )
        fired = {r for r in rule_ids if match_rule(probe, r, call_args)}
        if fired:
            statements.append(stmt)
            indices.append(idx)
            matched_rules.append(fired)
    return CodeAttention(
        gadget_id=gadget.id,
        statements=statements,
        indices=indices,
        matched_rules=matched_rules,
    )
