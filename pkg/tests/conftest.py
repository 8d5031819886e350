"""Shared builders: synthetic dependence graphs and end-to-end gadget helpers."""
from __future__ import annotations

from vulnpipe.depgraph import DepEdge, DepNode, Sdg, build_sdg
from vulnpipe.lexer import IDENTIFIER, Token, lex
from vulnpipe.slicer import CodeGadget, extract_gadget
from vulnpipe.source import CallSite, Statement, extract_call_sites, parse_source


def stub_statement(sid: int, text: str = "x = y ;") -> Statement:
    tokens = tuple(lex(text))
    return Statement(
        id=sid,
        line=sid,
        tokens=tokens,
        attribute="Expression",
        contains_call=False,
        enclosing_function="f",
    )


def make_sdg(node_ids, edges) -> Sdg:
    """Synthetic SDG: edges are (src, dst, kind, var) tuples."""
    nodes = [DepNode(statement=stub_statement(i), function="f") for i in node_ids]
    dep_edges = [DepEdge(src, dst, kind, var) for (src, dst, kind, var) in edges]
    return Sdg(nodes, dep_edges)


def make_call_site(sdg: Sdg, node_id: int, args=("x",)) -> CallSite:
    stmt = sdg.statement(node_id)
    arg_tokens = tuple(Token(a, IDENTIFIER, stmt.line, k + 1) for k, a in enumerate(args))
    return CallSite(
        statement=stmt,
        callee="sink",
        callee_token=Token("sink", IDENTIFIER, stmt.line, 1),
        args=arg_tokens,
        arg_positions=[[t] for t in arg_tokens],
        index_in_statement=1,
    )


def gadget_from_source(
    src: str, callee: str, path: str = "prog.c", include_control: bool = True
) -> CodeGadget:
    program = parse_source(src, path=path)
    sdg = build_sdg(program)
    sites = extract_call_sites(program, [callee])
    assert sites, f"no call site for {callee}"
    return extract_gadget(
        sdg, sites[0], gadget_id=1, include_control=include_control, source_path=path
    )


def bidirectional_closure(node_ids, edges, seed, kinds=("Data", "Control", "ParamBind")):
    """Independent oracle: reflexive-transitive closure over typed edges, both ways."""
    fwd = {(s, d) for (s, d, k, _v) in edges if k in kinds}
    back = {(d, s) for (s, d) in fwd}

    def walk(rel):
        seen = {seed}
        frontier = [seed]
        while frontier:
            n = frontier.pop()
            for (a, b) in rel:
                if a == n and b not in seen:
                    seen.add(b)
                    frontier.append(b)
        return seen

    return (walk(fwd) | walk(back)) & set(node_ids)
