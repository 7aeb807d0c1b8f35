import pytest
from hypothesis import given, settings, strategies as st

from atnosferes.builder import (
    END,
    START,
    Atn,
    BuildConfig,
    Edge,
    apply_token,
    filter_contradictions,
    finalize,
    interpret,
    to_dot,
)
from atnosferes.tokens import Cell, Direction as D, build_genetic_code, parse_mnemonic, translate, integer_genome

NC = BuildConfig(no_contradiction=True)


def toks(*names):
    return [parse_mnemonic(n) for n in names]


def run_stack(stack, *names):
    graph = Atn(node_count=10)
    for tok in toks(*names):
        apply_token(stack, graph, tok)
    return stack, graph


def test_empty_program():
    atn = interpret([])
    assert atn.node_count == 2 and atn.edges == []


def test_connect_start_takes_labels_above_node():
    atn = interpret(toks("node", "foodN?", "goN!", "connect start"))
    assert atn.node_count == 3
    assert atn.edges == [Edge(START, 2, ((D.N, Cell.FOOD),), (D.N,))]


def test_connect_self_with_contradiction_filter():
    prog = toks("foodN?", "treeN?", "node", "connect self")
    assert interpret(prog, NC).edges == [Edge(2, 2, ((D.N, Cell.FOOD),), ())]
    assert interpret(prog).edges == [Edge(2, 2, ((D.N, Cell.FOOD), (D.N, Cell.TREE)), ())]


def test_connect_needs_two_nodes():
    assert interpret(toks("connect")).edges == []
    assert interpret(toks("node", "connect")).edges == []
    for op in ("connect self", "connect start", "connect end"):
        assert interpret(toks(op)).edges == []


def test_connect_consumes_labels_above_source():
    stack, graph = [], Atn()
    for tok in toks("emptyS?", "node", "foodN?", "node", "goE!", "connect"):
        apply_token(stack, graph, tok)
    # the label below the source stays on the stack
    assert graph.edges == [Edge(2, 3, ((D.N, Cell.FOOD),), (D.E,))]
    assert stack == [parse_mnemonic("emptyS?"), 2, 3]
    finalize(stack, graph)
    assert graph.edges[-1] == Edge(3, END, ((D.S, Cell.EMPTY),), ())
    assert stack == []


def test_unary_connect_stops_at_lower_node():
    atn = interpret(toks("goW!", "node", "goN!", "node", "goS!", "connect end"))
    assert atn.edges == [Edge(3, END, (), (D.N, D.S)), Edge(3, END, (), (D.W,))]


def test_finalize_without_nodes():
    assert interpret(toks("goS!", "emptyE?")).edges == [Edge(START, END, ((D.E, Cell.EMPTY),), (D.S,))]
    assert interpret(toks("node", "goS!")).edges == [Edge(2, END, (), (D.S,))]
    assert interpret(toks("node", "node")).edges == []


def test_dup_node_aliases():
    stack, graph = run_stack([5], "dup node")
    assert stack == [5, 5] and graph.node_count == 10
    a = parse_mnemonic("foodN?")
    stack, _ = run_stack([a, 5], "dup label")
    assert stack == [a, a, 5]


def test_del_keeps_graph_nodes():
    atn = interpret(toks("node", "del node", "goN!"))
    assert atn.node_count == 3
    assert atn.edges == [Edge(START, END, (), (D.N,))]
    a, b = toks("foodN?", "goE!")
    stack, _ = run_stack([a, 5, b], "del label")
    assert stack == [a, 5]


def test_swap_variants():
    a, b = toks("foodN?", "goE!")
    assert run_stack([a, 5, b], "swap label")[0] == [b, 5, a]
    assert run_stack([a, 5, b], "swap node")[0] == [a, 5, b]
    assert run_stack([a, 5, b], "swap all")[0] == [a, b, 5]
    assert run_stack([a, 5], "swap label")[0] == [a, 5]


def test_roll_variants():
    a, b = toks("foodN?", "goE!")
    assert run_stack([5, 6], "roll all")[0] == [6, 5]
    assert run_stack([4, a, 5, b, 6], "roll node")[0] == [6, a, 4, b, 5]
    assert run_stack([4, a, 5, b, 6], "unroll node")[0] == [5, a, 6, b, 4]
    assert run_stack([4, a, 5, b, 6], "roll all")[0] == [6, 4, a, 5, b]
    assert run_stack([4, a, 5, b, 6], "unroll all")[0] == [a, 5, b, 6, 4]
    assert run_stack([4, a, 5, b, 6], "roll label")[0] == [4, b, 5, a, 6]


@pytest.mark.parametrize(
    "conds, expected",
    [
        ([(D.N, Cell.FOOD), (D.N, Cell.TREE), (D.E, Cell.EMPTY)], [(D.N, Cell.FOOD), (D.E, Cell.EMPTY)]),
        ([], []),
        ([(D.W, Cell.TREE), (D.W, Cell.TREE)], [(D.W, Cell.TREE)]),
    ],
)
def test_filter_contradictions(conds, expected):
    assert filter_contradictions(conds) == expected


codons = st.lists(st.integers(0, 63), max_size=300)


@settings(max_examples=300, deadline=None)
@given(codons, st.booleans(), st.booleans())
def test_interpret_total_deterministic_and_filtered(cs, typed, nc):
    tokens = translate(integer_genome(cs), build_genetic_code(typed))
    config = BuildConfig(nc, typed)
    a, b = interpret(tokens, config), interpret(tokens, config)
    assert a == b
    for e in a.edges:
        assert 0 <= e.src < a.node_count and 0 <= e.dst < a.node_count
        if nc:
            dirs = [d for d, _ in e.conditions]
            assert len(dirs) == len(set(dirs))


@settings(max_examples=300, deadline=None)
@given(codons)
def test_stack_empty_after_finalize(cs):
    stack, graph = [], Atn()
    for tok in translate(integer_genome(cs), build_genetic_code(True)):
        apply_token(stack, graph, tok)
        assert all(n < graph.node_count for n in stack if type(n) is int)
    finalize(stack, graph)
    assert stack == []


@settings(max_examples=300, deadline=None)
@given(codons)
def test_scoped_ops_conserve_other_kind(prefix):
    code = build_genetic_code(True)
    stack, graph = [], Atn()
    for tok in translate(integer_genome(prefix), code):
        apply_token(stack, graph, tok)
    for tok in code.table:
        if tok.op in ("swap", "roll", "unroll", "dup", "del") and tok.scope != "all":
            before = list(stack)
            after, _ = apply_token(list(stack), Atn(graph.node_count), tok)
            other_before = sorted(map(repr, (i for i in before if (type(i) is int) != (tok.scope == "node"))))
            other_after = sorted(map(repr, (i for i in after if (type(i) is int) != (tok.scope == "node"))))
            assert other_before == other_after


def test_dot_export_numbering():
    atn = interpret(toks("node", "foodN?", "goN!", "connect start", "node", "treeE?", "goS!", "connect"))
    dot = to_dot(atn)
    assert 'n0 [label="0" shape=doublecircle]' in dot
    assert 'n3 [label="3" shape=doublecircle]' in dot
    assert 'n0 -> n1 [label="fN\\nN"' in dot
    assert 'n1 -> n2 [label="tE\\nS"' in dot
    assert to_dot(interpret([])).count("->") == 0
