"""Per-function program dependence graphs linked into a system dependence graph.

Data edges come from reaching definitions computed structurally over the
statement tree (both branches of if/else merge; loop bodies get one extra
fixpoint pass for loop-carried dependences). Control edges run from each
control header to its directly nested statements, so transitive control
dependence is path traversal. Functions are linked by Call edges and by
ParamBind edges: actuals bind into formal uses, and writes through
pointer/array formals bind back to the call site.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .lexer import IDENTIFIER, KEYWORD
from .source import (
    CONTROL,
    DEFINITION,
    FunctionUnit,
    Program,
    Statement,
    _is_type_start,
    declarators,
    iter_calls,
)

DATA = "Data"
CONTROL_DEP = "Control"
CALL = "Call"
PARAM_BIND = "ParamBind"

_ENTRY = -1  # sentinel definition site: value live at region entry

_ASSIGN_OPS = frozenset(
    ("=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=")
)


class UnknownNode(KeyError):
    pass


@dataclass(frozen=True)
class DepEdge:
    src: int
    dst: int
    kind: str
    var: str | None = None


@dataclass
class DepNode:
    statement: Statement
    function: str | None


@dataclass
class Effects:
    strong_defs: list[str]
    weak_defs: list[str]
    uses: list[str]


@dataclass
class PdgResult:
    nodes: list[int]
    edges: list[DepEdge]
    # var -> statements whose use of var is reached by the entry value
    unresolved_uses: dict[str, set[int]] = field(default_factory=dict)
    # var -> statements whose definition of var reaches region exit
    exit_defs: dict[str, set[int]] = field(default_factory=dict)


def _use_identifiers(tokens) -> list[str]:
    """Identifier texts read by a statement. Callee names, member names after
    '.'/'->', and struct tags are not variable reads."""
    out: list[str] = []
    for i, t in enumerate(tokens):
        if t.kind != IDENTIFIER:
            continue
        if i + 1 < len(tokens) and tokens[i + 1].text == "(":
            continue
        if i > 0 and tokens[i - 1].text in (".", "->"):
            continue
        if i > 0 and tokens[i - 1].kind == KEYWORD and tokens[i - 1].text in (
            "struct",
            "union",
            "enum",
        ):
            continue
        if t.text not in out:
            out.append(t.text)
    return out


def _incdec_targets(tokens) -> list[str]:
    out: list[str] = []
    for i, t in enumerate(tokens):
        if t.text in ("++", "--"):
            for j in (i - 1, i + 1):
                if 0 <= j < len(tokens) and tokens[j].kind == IDENTIFIER:
                    if tokens[j].text not in out:
                        out.append(tokens[j].text)
                    break
    return out


def _assignment_targets(tokens) -> list[tuple[str, bool, str]]:
    """(base name, is_plain_lvalue, operator) per assignment in the statement.

    The base name is found by walking left from the operator across bracket
    groups and member selectors. 'a = ...' is a plain (killing) write; writes
    through '*p', 'a[i]' or 's->f' are not.
    """
    out: list[tuple[str, bool, str]] = []
    for i, t in enumerate(tokens):
        if not (t.kind == "operator" and t.text in _ASSIGN_OPS):
            continue
        j = i - 1
        depth = 0
        name = None
        while j >= 0:
            tj = tokens[j]
            if tj.text in (")", "]"):
                depth += 1
            elif tj.text in ("(", "["):
                depth -= 1
                if depth < 0:
                    break
            elif depth == 0:
                if tj.kind == IDENTIFIER:
                    if j > 0 and tokens[j - 1].text in (".", "->"):
                        j -= 2  # member name: keep walking to the base
                        continue
                    name = tj.text
                    break
                if tj.text in (";", ",", "{", "}"):
                    break
            j -= 1
        if name is None:
            continue
        plain = j == i - 1 and (
            j == 0 or tokens[j - 1].text not in ("*", ".", "->", "]", ")")
        )
        out.append((name, plain, t.text))
    return out


def statement_effects(stmt: Statement, ref_vars: set[str]) -> Effects:
    """Defined and used variable names of one statement.

    ``ref_vars`` are names with pointer/array type in scope: passing one to a
    call conservatively counts as a write through it (weak definition).
    """
    tokens = stmt.tokens
    declared: list[str] = []
    if stmt.attribute == DEFINITION:
        declared = [d.name for d in declarators(tokens)]
    elif stmt.attribute == CONTROL and tokens[0].text == "for":
        init = []
        for t in tokens[2:]:
            if t.text == ";":
                break
            init.append(t)
        if init and _is_type_start(init):
            declared = [d.name for d in declarators(init)]

    strong: list[str] = list(dict.fromkeys(declared))
    weak: list[str] = []
    reads_target: set[str] = set()

    for name, plain, op in _assignment_targets(tokens):
        if op != "=" or not plain:
            reads_target.add(name)
        if name in declared:
            continue
        if plain:
            if name not in strong:
                strong.append(name)
        elif name not in weak and name not in strong:
            weak.append(name)

    for name in _incdec_targets(tokens):
        reads_target.add(name)
        if name not in strong and name not in weak:
            strong.append(name)

    for occ in iter_calls(tokens):
        for pos in occ.arg_positions:
            for tok in pos:
                if tok.text in ref_vars and tok.text not in weak and tok.text not in strong:
                    weak.append(tok.text)

    killed = {
        name
        for name, plain, op in _assignment_targets(tokens)
        if plain and op == "=" and name not in reads_target
    }
    uses = [
        u
        for u in _use_identifiers(tokens)
        if u not in declared and u not in killed
    ]
    for name in weak + sorted(reads_target):
        if name not in uses and name not in declared:
            uses.append(name)
    return Effects(strong_defs=strong, weak_defs=weak, uses=uses)


def _ref_vars_of(function: FunctionUnit, extra: set[str] | None = None) -> set[str]:
    refs: set[str] = set(extra or ())
    for p in function.params:
        if p.by_ref:
            refs.add(p.name)
    for stmt in function.statements:
        if stmt.attribute == DEFINITION:
            for d in declarators(stmt.tokens):
                if d.by_ref:
                    refs.add(d.name)
    return refs


class _FlowContext:
    def __init__(self, statements: list[Statement], ref_vars: set[str]):
        self.effects: dict[int, Effects] = {
            s.id: statement_effects(s, ref_vars) for s in statements
        }
        self.by_id = {s.id: s for s in statements}
        self.kids: dict[int | None, list[Statement]] = {}
        for s in statements:
            self.kids.setdefault(s.control_parent, []).append(s)
        self.edges: list[DepEdge] = []
        self._edge_set: set[DepEdge] = set()
        self.unresolved: dict[str, set[int]] = {}

    def children(self, sid: int) -> tuple[list[Statement], list[Statement]]:
        kids = self.kids.get(sid, [])
        then = [k for k in kids if k.branch != "else"]
        other = [k for k in kids if k.branch == "else"]
        return then, other

    def add_edge(self, edge: DepEdge) -> None:
        if edge.src == edge.dst:
            return
        if edge not in self._edge_set:
            self._edge_set.add(edge)
            self.edges.append(edge)

    def record_uses(self, stmt: Statement, state: dict[str, frozenset[int]]) -> None:
        for var in self.effects[stmt.id].uses:
            for d in sorted(state.get(var, frozenset((_ENTRY,)))):
                if d == _ENTRY:
                    self.unresolved.setdefault(var, set()).add(stmt.id)
                else:
                    self.add_edge(DepEdge(d, stmt.id, DATA, var))

    def apply_defs(self, stmt: Statement, state: dict[str, frozenset[int]]) -> None:
        eff = self.effects[stmt.id]
        for var in eff.strong_defs:
            state[var] = frozenset((stmt.id,))
        for var in eff.weak_defs:
            state[var] = state.get(var, frozenset((_ENTRY,))) | {stmt.id}


def _merge(
    a: dict[str, frozenset[int]], b: dict[str, frozenset[int]]
) -> dict[str, frozenset[int]]:
    out = dict(a)
    for var, defs in b.items():
        prior = out.get(var)
        out[var] = defs if prior is None else prior | defs
    return out


def _flow(region: list[Statement], state: dict[str, frozenset[int]], ctx: _FlowContext):
    for stmt in region:
        head = stmt.tokens[0].text
        if stmt.attribute == CONTROL and head == "if":
            ctx.record_uses(stmt, state)
            ctx.apply_defs(stmt, state)
            then_kids, else_kids = ctx.children(stmt.id)
            s_then = _flow(then_kids, dict(state), ctx)
            if else_kids:
                s_else = _flow(else_kids, dict(state), ctx)
                state = _merge(s_then, s_else)
            else:
                state = _merge(s_then, state)
        elif stmt.attribute == CONTROL and head in ("for", "while"):
            then_kids, _ = ctx.children(stmt.id)
            st = dict(state)
            for _ in range(2):  # second pass closes loop-carried def-use chains
                ctx.record_uses(stmt, st)
                ctx.apply_defs(stmt, st)
                body_exit = _flow(then_kids, dict(st), ctx)
                st = _merge(st, body_exit)
            state = st
        elif stmt.attribute == CONTROL and head == "switch":
            ctx.record_uses(stmt, state)
            ctx.apply_defs(stmt, state)
            kids, _ = ctx.children(stmt.id)
            body_exit = _flow(kids, dict(state), ctx)
            state = _merge(state, body_exit)
        else:
            ctx.record_uses(stmt, state)
            ctx.apply_defs(stmt, state)
    return state


def _control_edges(ctx: _FlowContext) -> None:
    for stmt in ctx.by_id.values():
        if stmt.attribute != CONTROL:
            continue
        then_kids, else_kids = ctx.children(stmt.id)
        for kid in then_kids + else_kids:
            ctx.add_edge(DepEdge(stmt.id, kid.id, CONTROL_DEP))


def build_region_pdg(
    statements: list[Statement], ref_vars: set[str] | None = None
) -> PdgResult:
    """Dependence graph for an ordered statement region (function body or globals)."""
    ctx = _FlowContext(statements, ref_vars if ref_vars is not None else set())
    top = [s for s in statements if s.control_parent is None]
    exit_state = _flow(top, {}, ctx)
    _control_edges(ctx)
    exit_defs = {
        var: {d for d in defs if d != _ENTRY}
        for var, defs in exit_state.items()
        if any(d != _ENTRY for d in defs)
    }
    return PdgResult(
        nodes=[s.id for s in statements],
        edges=ctx.edges,
        unresolved_uses=ctx.unresolved,
        exit_defs=exit_defs,
    )


def build_pdg(function: FunctionUnit, ref_vars: set[str] | None = None) -> PdgResult:
    """Data and control dependence edges for one function."""
    refs = _ref_vars_of(function, ref_vars)
    return build_region_pdg(function.statements, refs)


class Sdg:
    """System dependence graph: one node per statement, typed directed edges."""

    def __init__(self, nodes: list[DepNode], edges: list[DepEdge]):
        self.nodes = nodes
        self.edges = edges
        self.by_statement: dict[int, int] = {
            n.statement.id: i for i, n in enumerate(nodes)
        }
        self._out: dict[int, list[DepEdge]] = {}
        self._in: dict[int, list[DepEdge]] = {}
        for e in edges:
            self._out.setdefault(e.src, []).append(e)
            self._in.setdefault(e.dst, []).append(e)

    def _check(self, sid: int) -> None:
        if sid not in self.by_statement:
            raise UnknownNode(sid)

    def statement(self, sid: int) -> Statement:
        self._check(sid)
        return self.nodes[self.by_statement[sid]].statement

    def out_edges(self, sid: int) -> list[DepEdge]:
        self._check(sid)
        return self._out.get(sid, [])

    def in_edges(self, sid: int) -> list[DepEdge]:
        self._check(sid)
        return self._in.get(sid, [])

    def data_successors(self, sid: int, variable: str | None = None) -> set[int]:
        return {
            e.dst
            for e in self.out_edges(sid)
            if e.kind in (DATA, PARAM_BIND) and (variable is None or e.var == variable)
        }

    def data_predecessors(self, sid: int, variable: str | None = None) -> set[int]:
        return {
            e.src
            for e in self.in_edges(sid)
            if e.kind in (DATA, PARAM_BIND) and (variable is None or e.var == variable)
        }

    def control_successors(self, sid: int) -> set[int]:
        return {e.dst for e in self.out_edges(sid) if e.kind == CONTROL_DEP}

    def control_predecessors(self, sid: int) -> set[int]:
        return {e.src for e in self.in_edges(sid) if e.kind == CONTROL_DEP}

    def dump(self) -> str:
        """One line per edge: fromId toId kind variable (tab-separated)."""
        lines = [
            f"{e.src}\t{e.dst}\t{e.kind}\t{e.var if e.var is not None else '-'}"
            for e in self.edges
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def build_program_pdgs(program: Program) -> dict[str, PdgResult]:
    """Per-function PDGs plus a '' entry for the global statement region."""
    global_refs = {
        d.name
        for s in program.global_statements
        if s.attribute == DEFINITION
        for d in declarators(s.tokens)
        if d.by_ref
    }
    pdgs: dict[str, PdgResult] = {"": build_region_pdg(program.global_statements, set(global_refs))}
    for fn in program.functions:
        pdgs[fn.name] = build_pdg(fn, set(global_refs))
    return pdgs


def build_sdg(program: Program, pdgs: dict[str, PdgResult] | None = None) -> Sdg:
    """Union of per-function PDGs plus caller-callee linking.

    Adds, for every call whose callee is defined in the program: a Call edge
    to the callee's first statement, ParamBind edges from the call site to
    callee statements reading each bound formal, and reverse ParamBind edges
    from callee writes through pointer/array formals back to the call site.
    Definitions of globals link to function statements that read them.
    Calls to undefined (library) functions add no linking edges.
    """
    if pdgs is None:
        pdgs = build_program_pdgs(program)
    functions = {fn.name: fn for fn in program.functions}

    nodes = [
        DepNode(statement=s, function=s.enclosing_function) for s in program.statements
    ]
    edges: list[DepEdge] = []
    edge_set: set[DepEdge] = set()

    def add(edge: DepEdge) -> None:
        if edge.src != edge.dst and edge not in edge_set:
            edge_set.add(edge)
            edges.append(edge)

    for name in [""] + [fn.name for fn in program.functions]:
        for e in pdgs[name].edges:
            add(e)

    global_exit = pdgs[""].exit_defs

    for fn in program.functions:
        res = pdgs[fn.name]
        formals = {p.name for p in fn.params}
        for var, users in sorted(res.unresolved_uses.items()):
            if var in formals:
                continue  # bound at call sites via ParamBind
            for g in sorted(global_exit.get(var, ())):
                for u in sorted(users):
                    add(DepEdge(g, u, DATA, var))

    for fn in program.functions:
        for stmt in fn.statements:
            for occ in iter_calls(stmt.tokens):
                callee = functions.get(occ.callee.text)
                if callee is None:
                    continue
                if callee.statements:
                    add(DepEdge(stmt.id, callee.statements[0].id, CALL))
                res = pdgs[callee.name]
                for k, formal in enumerate(callee.params):
                    actuals = occ.arg_positions[k] if k < len(occ.arg_positions) else []
                    for u in sorted(res.unresolved_uses.get(formal.name, ())):
                        add(DepEdge(stmt.id, u, PARAM_BIND, formal.name))
                    if formal.by_ref:
                        for d in sorted(res.exit_defs.get(formal.name, ())):
                            for actual in actuals:
                                add(DepEdge(d, stmt.id, PARAM_BIND, actual.text))
    return Sdg(nodes, edges)
