"""Stack machine that turns a token stream into an ATN.

Stack items are either node references (plain ``int`` node ids) or label
tokens (:class:`~atnosferes.tokens.Token` of kind condition/action). The
interpreter is total: any token whose preconditions are not met is a no-op.

Token semantics:

* condition / action: push the label.
* ``node``: create a node, push a reference to it.
* ``connect``: with T the topmost and S the next node reference, add the
  edge S->T labelled with every label above S. ``connect self|start|end``
  add T->T, Start->T, T->End, consuming the labels above the node
  reference below T (the whole stack if T is the only one).
* ``dup node`` pushes another reference to the topmost node; ``dup label``
  copies the topmost label in place; ``del`` removes the topmost item of
  its kind.
* ``swap`` exchanges the two topmost items (of its kind, for scoped ops);
  ``roll`` moves the top item to the bottom and ``unroll`` the bottom item
  to the top, restricted to the positions of its kind for scoped ops.
* at the end, remaining labels form one edge from the topmost node
  reference (or Start) to End, and the stack is cleared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .tokens import Cell, Direction, Token, TokenKind

START = 0
END = 1

Condition = tuple[Direction, Cell]


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    conditions: tuple[Condition, ...] = ()
    actions: tuple[Direction, ...] = ()


@dataclass(frozen=True)
class BuildConfig:
    no_contradiction: bool = False
    typed_stack_ops: bool = False


@dataclass
class Atn:
    """Graph under construction / built automaton.

    Node ids are ``0..node_count-1`` with Start=0 and End=1; edges keep
    creation order.
    """

    node_count: int = 2
    edges: list[Edge] = field(default_factory=list)
    _out: Optional[list[list[Edge]]] = field(default=None, repr=False, compare=False)

    start = START
    end = END

    @property
    def nodes(self) -> range:
        return range(self.node_count)

    def new_node(self) -> int:
        self.node_count += 1
        self._out = None
        return self.node_count - 1

    def add_edge(self, edge: Edge) -> None:
        self.edges.append(edge)
        self._out = None

    def out_edges(self, node: int) -> list[Edge]:
        if self._out is None:
            out: list[list[Edge]] = [[] for _ in range(self.node_count)]
            for e in self.edges:
                out[e.src].append(e)
            self._out = out
        return self._out[node]


def filter_contradictions(conditions: Iterable[Condition]) -> list[Condition]:
    """Keep the first condition on each direction, drop later ones."""
    seen: set[Direction] = set()
    kept = []
    for cond in conditions:
        if cond[0] not in seen:
            seen.add(cond[0])
            kept.append(cond)
    return kept


def _top_nodes(stack: list, k: int) -> list[int]:
    """Indices of up to ``k`` topmost node references, topmost first."""
    found = []
    for i in range(len(stack) - 1, -1, -1):
        if type(stack[i]) is int:
            found.append(i)
            if len(found) == k:
                break
    return found


def _top_label(stack: list, k: int) -> list[int]:
    found = []
    for i in range(len(stack) - 1, -1, -1):
        if type(stack[i]) is not int:
            found.append(i)
            if len(found) == k:
                break
    return found


def _make_edge(src: int, dst: int, labels: Sequence[Token], config: BuildConfig) -> Edge:
    conditions = [(t.direction, t.percept) for t in labels if t.kind is TokenKind.CONDITION]
    if config.no_contradiction:
        conditions = filter_contradictions(conditions)
    actions = tuple(t.direction for t in labels if t.kind is TokenKind.ACTION)
    return Edge(src, dst, tuple(conditions), actions)


def _connect(stack: list, graph: Atn, op: str, config: BuildConfig) -> None:
    nodes = _top_nodes(stack, 2)
    if op == "connect":
        if len(nodes) < 2:
            return
        src, dst = stack[nodes[1]], stack[nodes[0]]
    else:
        if not nodes:
            return
        target = stack[nodes[0]]
        src, dst = {
            "connect self": (target, target),
            "connect start": (START, target),
            "connect end": (target, END),
        }[op]
    floor = nodes[1] + 1 if len(nodes) == 2 else 0
    segment = stack[floor:]
    labels = [item for item in segment if type(item) is not int]
    if labels:
        stack[floor:] = [item for item in segment if type(item) is int]
    graph.add_edge(_make_edge(src, dst, labels, config))


def _stack_op(stack: list, op: str, scope: str) -> None:
    if scope == "all":
        n = len(stack)
        if op == "swap":
            if n >= 2:
                stack[-1], stack[-2] = stack[-2], stack[-1]
        elif op == "roll":
            if n >= 2:
                stack.insert(0, stack.pop())
        elif op == "unroll":
            if n >= 2:
                stack.append(stack.pop(0))
        return
    find = _top_nodes if scope == "node" else _top_label
    if op == "dup":
        idx = find(stack, 1)
        if idx:
            if scope == "node":
                stack.append(stack[idx[0]])
            else:
                stack.insert(idx[0] + 1, stack[idx[0]])
    elif op == "del":
        idx = find(stack, 1)
        if idx:
            del stack[idx[0]]
    elif op == "swap":
        idx = find(stack, 2)
        if len(idx) == 2:
            i, j = idx
            stack[i], stack[j] = stack[j], stack[i]
    else:
        want_node = scope == "node"
        idx = [i for i, item in enumerate(stack) if (type(item) is int) is want_node]
        if len(idx) < 2:
            return
        items = [stack[i] for i in idx]
        items = items[-1:] + items[:-1] if op == "roll" else items[1:] + items[:1]
        for i, item in zip(idx, items):
            stack[i] = item


def apply_token(stack: list, graph: Atn, token: Token, config: BuildConfig = BuildConfig()) -> tuple[list, Atn]:
    """Execute one token, mutating ``stack`` and ``graph`` in place."""
    kind = token.kind
    if kind is TokenKind.CONDITION or kind is TokenKind.ACTION:
        stack.append(token)
    elif kind is TokenKind.STRUCTURE:
        if token.op == "node":
            stack.append(graph.new_node())
        else:
            _connect(stack, graph, token.op, config)
    else:
        _stack_op(stack, token.op, token.scope)
    return stack, graph


def finalize(stack: list, graph: Atn, config: BuildConfig = BuildConfig()) -> Atn:
    labels = [item for item in stack if type(item) is not int]
    if labels:
        nodes = [item for item in stack if type(item) is int]
        src = nodes[-1] if nodes else START
        graph.add_edge(_make_edge(src, END, labels, config))
    stack.clear()
    return graph


def interpret(tokens: Iterable[Token], config: BuildConfig = BuildConfig()) -> Atn:
    stack: list = []
    graph = Atn()
    for token in tokens:
        apply_token(stack, graph, token, config)
    return finalize(stack, graph, config)


def edge_label(edge: Edge) -> tuple[str, str]:
    """(conditions, actions) in figure notation, e.g. ``("fN eE", "N")``."""
    conds = " ".join(f"{cell.word[0]}{d.name}" for d, cell in edge.conditions)
    acts = " ".join(d.name for d in edge.actions)
    return conds, acts


def export_numbering(atn: Atn) -> dict[int, int]:
    """Display numbers: Start is 0, End the largest, others in creation order."""
    numbers = {START: 0, END: atn.node_count - 1}
    for i, node in enumerate(range(2, atn.node_count), 1):
        numbers[node] = i
    return numbers


def to_dot(atn: Atn, name: str = "atn") -> str:
    """Graphviz source; edge labels show conditions above actions."""
    num = export_numbering(atn)
    lines = [f'digraph "{name}" {{', "  rankdir=LR;"]
    for node in atn.nodes:
        shape = "doublecircle" if node in (START, END) else "circle"
        lines.append(f'  n{num[node]} [label="{num[node]}" shape={shape}];')
    for i, edge in enumerate(atn.edges):
        conds, acts = edge_label(edge)
        lines.append(
            f'  n{num[edge.src]} -> n{num[edge.dst]} [label="{conds}\\n{acts}" comment="edge {i}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
