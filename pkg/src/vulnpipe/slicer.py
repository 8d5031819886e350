"""Code gadget extraction: bidirectional dependence slices around a call site.

For every argument of a security-relevant call, the forward slice collects
statements reachable through data flow (dependence propagates through
intermediate variables, so the per-argument walk is the dependence closure
from the call node) or through control edges; the backward slice mirrors it
over predecessors. The gadget is the merged, source-ordered union plus the
call statement itself. A visited set guards against dependence cycles from
loops.
"""
from __future__ import annotations

from dataclasses import dataclass

from .depgraph import CONTROL_DEP, DATA, PARAM_BIND, Sdg
from .source import CallSite, Statement


@dataclass
class CodeGadget:
    id: int
    call_site: CallSite
    statements: list[Statement]  # source order
    forward_part: frozenset[int]
    backward_part: frozenset[int]
    source_path: str

    @property
    def statement_ids(self) -> list[int]:
        return [s.id for s in self.statements]

    @property
    def lines(self) -> set[int]:
        return {s.line for s in self.statements}


def _reach(sdg: Sdg, seed: int, forward: bool, kinds: frozenset[str]) -> set[int]:
    visited = {seed}
    stack = [seed]
    while stack:
        n = stack.pop()
        edges = sdg.out_edges(n) if forward else sdg.in_edges(n)
        for e in edges:
            if e.kind not in kinds:
                continue
            m = e.dst if forward else e.src
            if m not in visited:
                visited.add(m)
                stack.append(m)
    visited.discard(seed)
    return visited


def _kinds(include_control: bool) -> frozenset[str]:
    kinds = {DATA, PARAM_BIND}
    if include_control:
        kinds.add(CONTROL_DEP)
    return frozenset(kinds)


def forward_slice(sdg: Sdg, call_node: int, arg_token: str, include_control: bool = True) -> set[int]:
    """Statements reachable from the call node over data/param-binding flow
    seeded by ``arg_token`` (propagated transitively) or control edges.
    The call node itself is not included."""
    sdg._check(call_node)
    return _reach(sdg, call_node, forward=True, kinds=_kinds(include_control))


def backward_slice(sdg: Sdg, call_node: int, arg_token: str, include_control: bool = True) -> set[int]:
    """Statements from which ``arg_token``'s value flows into the call node,
    or on which the call node is transitively control-dependent."""
    sdg._check(call_node)
    return _reach(sdg, call_node, forward=False, kinds=_kinds(include_control))


def control_ancestors(sdg: Sdg, node: int) -> set[int]:
    return _reach(sdg, node, forward=False, kinds=frozenset((CONTROL_DEP,)))


def extract_gadget(
    sdg: Sdg,
    call_site: CallSite,
    gadget_id: int = 0,
    include_control: bool = True,
    source_path: str = "",
) -> CodeGadget:
    """Merge per-argument forward and backward slices into one gadget.

    Zero-argument calls still pick up the headers governing the call
    statement. Output order follows source order (function appearance, then
    line), which statement ids encode.
    """
    sid = call_site.statement.id
    sf: set[int] = set()
    sb: set[int] = set()
    for arg in call_site.arg_texts:
        sf |= forward_slice(sdg, sid, arg, include_control)
        sb |= backward_slice(sdg, sid, arg, include_control)
    if include_control:
        sb |= control_ancestors(sdg, sid)
    ids = sorted(sf | sb | {sid})
    statements = [sdg.statement(i) for i in ids]
    return CodeGadget(
        id=gadget_id,
        call_site=call_site,
        statements=statements,
        forward_part=frozenset(sf),
        backward_part=frozenset(sb),
        source_path=source_path,
    )
