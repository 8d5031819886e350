import pytest

from vulnpipe.depgraph import (
    CALL,
    CONTROL_DEP,
    DATA,
    PARAM_BIND,
    UnknownNode,
    build_pdg,
    build_program_pdgs,
    build_sdg,
    statement_effects,
)
from vulnpipe.source import parse_source


def _fn_source(body: str) -> str:
    return "void f()\n{\n" + body + "\n}\n"


def _build(body: str):
    prog = parse_source(_fn_source(body))
    return prog, build_sdg(prog)


def _stmt(prog, snippet: str):
    matches = [s for s in prog.statements if snippet in s.text()]
    assert matches, f"no statement matching {snippet!r}"
    return matches[0]


def _edges(sdg, kind=None):
    return [(e.src, e.dst, e.kind, e.var) for e in sdg.edges if kind is None or e.kind == kind]


def test_single_statement_no_edges():
    prog = parse_source("void f(){ int a = 1; }")
    res = build_pdg(prog.functions[0])
    assert len(res.nodes) == 1
    assert res.edges == []


def test_simple_def_use_edge():
    prog, sdg = _build("int a = 1;\nint b = a;")
    a_def = _stmt(prog, "int a")
    b_def = _stmt(prog, "int b")
    assert (a_def.id, b_def.id, DATA, "a") in _edges(sdg)


def test_control_edge_from_if_header():
    prog, sdg = _build("if (x) {\ny = 1;\n}")
    header = _stmt(prog, "if")
    assign = _stmt(prog, "y = 1")
    assert (header.id, assign.id, CONTROL_DEP, None) in _edges(sdg)


def test_redefinition_kills_previous():
    prog, sdg = _build("int a = 1;\na = 2;\nint b = a;")
    first = _stmt(prog, "int a")
    second = _stmt(prog, "a = 2")
    use = _stmt(prog, "int b")
    edges = _edges(sdg, DATA)
    assert (second.id, use.id, DATA, "a") in edges
    assert (first.id, use.id, DATA, "a") not in edges


def test_both_branches_propagate():
    prog, sdg = _build("int a = 1;\nif (c)\na = 2;\nelse\na = 3;\nint b = a;")
    then_def = _stmt(prog, "a = 2")
    else_def = _stmt(prog, "a = 3")
    init = _stmt(prog, "int a")
    use = _stmt(prog, "int b")
    edges = _edges(sdg, DATA)
    assert (then_def.id, use.id, DATA, "a") in edges
    assert (else_def.id, use.id, DATA, "a") in edges
    assert (init.id, use.id, DATA, "a") not in edges  # both branches kill


def test_if_without_else_keeps_fallthrough():
    prog, sdg = _build("int a = 1;\nif (c)\na = 2;\nint b = a;")
    init = _stmt(prog, "int a")
    cond_def = _stmt(prog, "a = 2")
    use = _stmt(prog, "int b")
    edges = _edges(sdg, DATA)
    assert (init.id, use.id, DATA, "a") in edges
    assert (cond_def.id, use.id, DATA, "a") in edges


def test_loop_carried_dependence():
    prog, sdg = _build("int s = 0;\nint i = 0;\nwhile (i < 10) {\ns = s + i;\ni = i + 1;\n}")
    body_s = _stmt(prog, "s = s + i")
    body_i = _stmt(prog, "i = i + 1")
    header = _stmt(prog, "while")
    edges = _edges(sdg, DATA)
    assert (body_s.id, body_s.id, DATA, "s") not in edges  # no self loops
    assert (body_i.id, body_s.id, DATA, "i") in edges  # carried around the loop
    assert (body_i.id, header.id, DATA, "i") in edges


def test_for_header_defines_loop_variable():
    prog, sdg = _build("int n = 3;\nfor (int i = 0; i < n; i++) {\nuse(i);\n}")
    header = _stmt(prog, "for")
    body = _stmt(prog, "use")
    assert (header.id, body.id, DATA, "i") in _edges(sdg, DATA)
    assert (header.id, body.id, CONTROL_DEP, None) in _edges(sdg, CONTROL_DEP)


def test_pointer_arg_call_is_weak_definition():
    prog, sdg = _build(
        "char buf[10];\nfgets(buf, 10, stdin);\nuse(buf);"
    )
    decl = _stmt(prog, "char buf")
    call = _stmt(prog, "fgets")
    use = _stmt(prog, "use")
    edges = _edges(sdg, DATA)
    assert (decl.id, use.id, DATA, "buf") in edges  # weak update keeps the declaration
    assert (call.id, use.id, DATA, "buf") in edges


def test_nested_control_forest():
    prog, sdg = _build("if (a) {\nif (b) {\nx = 1;\n}\n}")
    outer = _stmt(prog, "if ( a )")
    inner = _stmt(prog, "if ( b )")
    assign = _stmt(prog, "x = 1")
    edges = _edges(sdg, CONTROL_DEP)
    assert (outer.id, inner.id, CONTROL_DEP, None) in edges
    assert (inner.id, assign.id, CONTROL_DEP, None) in edges
    assert (outer.id, assign.id, CONTROL_DEP, None) not in edges  # closest header only


def test_sdg_of_single_function_equals_pdg():
    prog = parse_source("void f(){ int a = 1; int b = a; }")
    pdg = build_pdg(prog.functions[0])
    sdg = build_sdg(prog)
    assert {(e.src, e.dst, e.kind, e.var) for e in sdg.edges} == {
        (e.src, e.dst, e.kind, e.var) for e in pdg.edges
    }


def test_two_functions_without_calls_are_disjoint():
    prog = parse_source("void f(){ int a = 1; }\nvoid g(){ int b = 2; }")
    sdg = build_sdg(prog)
    assert _edges(sdg, CALL) == []
    assert _edges(sdg, PARAM_BIND) == []


def test_node_count_is_sum_of_function_nodes():
    prog = parse_source("int g = 1;\nvoid f(){ int a = 1; }\nvoid h(){ int b = 2; int c = b; }")
    sdg = build_sdg(prog)
    assert len(sdg.nodes) == len(prog.statements)


def test_call_and_parambind_edges():
    src = (
        "void main()\n{\n"
        "char data[8];\n"
        "printMsg(data);\n"
        "}\n"
        "void printMsg(char *msg)\n{\n"
        "printf(msg);\n"
        "msg[0] = 0;\n"
        "}\n"
    )
    prog = parse_source(src)
    sdg = build_sdg(prog)
    call = _stmt(prog, "printMsg ( data )")
    callee_use = _stmt(prog, "printf")
    callee_write = _stmt(prog, "msg [ 0 ]")
    edges = _edges(sdg)
    assert (call.id, callee_use.id, CALL, None) in edges  # callee first statement
    assert (call.id, callee_use.id, PARAM_BIND, "msg") in edges
    assert (callee_write.id, call.id, PARAM_BIND, "data") in edges


def test_library_calls_add_no_call_edges():
    prog = parse_source("void f(){ printf(x); }")
    sdg = build_sdg(prog)
    assert _edges(sdg, CALL) == []


def test_global_definition_links_into_function():
    prog = parse_source("int limit = 10;\nvoid f(){ int a = limit; }")
    sdg = build_sdg(prog)
    gdef = _stmt(prog, "int limit")
    use = _stmt(prog, "int a")
    assert (gdef.id, use.id, DATA, "limit") in _edges(sdg, DATA)


def test_successor_queries_filter_by_kind():
    prog, sdg = _build("int a = 1;\nif (a) {\nint b = a;\n}")
    a_def = _stmt(prog, "int a")
    header = _stmt(prog, "if")
    b_def = _stmt(prog, "int b")
    assert sdg.data_successors(a_def.id) == {header.id, b_def.id}
    assert sdg.control_successors(header.id) == {b_def.id}
    assert sdg.data_predecessors(b_def.id) == {a_def.id}
    assert sdg.control_predecessors(b_def.id) == {header.id}
    assert sdg.data_successors(b_def.id) == set()


def test_variable_filtered_successors():
    prog, sdg = _build("int a = 1;\nint b = 2;\nint c = a + b;")
    a_def = _stmt(prog, "int a")
    c_def = _stmt(prog, "int c")
    assert sdg.data_successors(a_def.id, "a") == {c_def.id}
    assert sdg.data_successors(a_def.id, "b") == set()


def test_unknown_node_raises():
    _, sdg = _build("int a = 1;")
    with pytest.raises(UnknownNode):
        sdg.data_successors(9999)


def test_deterministic_construction():
    src = _fn_source("int a = 1;\nif (a) {\nint b = a;\na = b;\n}\nint c = a;")
    dump1 = build_sdg(parse_source(src)).dump()
    dump2 = build_sdg(parse_source(src)).dump()
    assert dump1 == dump2


def test_dump_format():
    prog, sdg = _build("int a = 1;\nint b = a;")
    line = sdg.dump().splitlines()[0]
    parts = line.split("\t")
    assert len(parts) == 4
    assert parts[2] == DATA and parts[3] == "a"


def test_statement_effects_compound_assignment():
    prog = parse_source("void f(){ a += b; }")
    eff = statement_effects(prog.statements[0], set())
    assert eff.strong_defs == ["a"]
    assert set(eff.uses) == {"a", "b"}


def test_statement_effects_array_write_is_weak():
    prog = parse_source("void f(){ dest[n - 1] = 0; }")
    eff = statement_effects(prog.statements[0], set())
    assert eff.weak_defs == ["dest"]
    assert set(eff.uses) == {"dest", "n"}
