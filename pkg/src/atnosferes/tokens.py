"""Token set, genetic code and genome translation.

A genome is a fixed-length string of codons. Each codon is a 6-bit value
(bitstring genomes) or an integer index in ``[0, 64)`` (integer genomes),
and the genetic code maps every codon value to one token of the
graph-building language.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

CODON_BITS = 6
CODE_SIZE = 1 << CODON_BITS
_BIT_WEIGHTS = 1 << np.arange(CODON_BITS - 1, -1, -1)


class Direction(enum.IntEnum):
    """Compass directions, in the order used by the genetic code."""

    N = 0
    S = 1
    W = 2
    E = 3
    NE = 4
    SE = 5
    NW = 6
    SW = 7

    @property
    def offset(self) -> tuple[int, int]:
        """(dx, dy) with y growing downward (north is row - 1)."""
        return _OFFSETS[self]


_OFFSETS = {
    Direction.N: (0, -1),
    Direction.S: (0, 1),
    Direction.W: (-1, 0),
    Direction.E: (1, 0),
    Direction.NE: (1, -1),
    Direction.SE: (1, 1),
    Direction.NW: (-1, -1),
    Direction.SW: (-1, 1),
}


class Cell(enum.IntEnum):
    """What occupies a grid cell; also the percept kind of a condition."""

    EMPTY = 0
    FOOD = 1
    TREE = 2

    @property
    def word(self) -> str:
        return self.name.lower()


class TokenKind(enum.Enum):
    STACK = "stack"
    STRUCTURE = "structure"
    CONDITION = "condition"
    ACTION = "action"


STACK_OPS = ("swap", "dup", "del", "roll", "unroll")
SCOPES = ("all", "node", "label")
STRUCTURE_OPS = ("node", "connect", "connect self", "connect start", "connect end")


@dataclass(frozen=True)
class Token:
    """One instruction of the graph-building language.

    ``op`` is the stack operator or structure instruction (``None`` for
    labels), ``scope`` the stack scope, ``direction``/``percept`` the label
    payload.
    """

    kind: TokenKind
    op: Optional[str] = None
    scope: Optional[str] = None
    direction: Optional[Direction] = None
    percept: Optional[Cell] = None

    @property
    def is_label(self) -> bool:
        return self.kind in (TokenKind.CONDITION, TokenKind.ACTION)

    @property
    def mnemonic(self) -> str:
        if self.kind is TokenKind.STACK:
            return f"{self.op} {self.scope}"
        if self.kind is TokenKind.STRUCTURE:
            return self.op
        if self.kind is TokenKind.ACTION:
            return f"go{self.direction.name}!"
        return f"{self.percept.word}{self.direction.name}?"

    def __repr__(self) -> str:
        return f"Token({self.mnemonic!r})"

    def __str__(self) -> str:
        return self.mnemonic


def stack_token(op: str, scope: str) -> Token:
    if op not in STACK_OPS or scope not in SCOPES:
        raise ValueError(f"unknown stack token {op} {scope}")
    if op in ("dup", "del") and scope == "all":
        raise ValueError(f"{op} has no 'all' variant")
    return Token(TokenKind.STACK, op=op, scope=scope)


def structure_token(op: str) -> Token:
    if op not in STRUCTURE_OPS:
        raise ValueError(f"unknown structure token {op!r}")
    return Token(TokenKind.STRUCTURE, op=op)


def action_token(direction: Direction) -> Token:
    return Token(TokenKind.ACTION, direction=Direction(direction))


def condition_token(direction: Direction, percept: Cell) -> Token:
    return Token(TokenKind.CONDITION, direction=Direction(direction), percept=Cell(percept))


def parse_mnemonic(text: str) -> Token:
    """Inverse of :attr:`Token.mnemonic` (``"swap all"``, ``"foodNE?"``, ``"goSW!"``)."""
    text = " ".join(text.split())
    if text.startswith("go") and text.endswith("!"):
        return action_token(Direction[text[2:-1]])
    if text.endswith("?"):
        for cell in Cell:
            if text.startswith(cell.word):
                return condition_token(Direction[text[len(cell.word):-1]], cell)
    if text in STRUCTURE_OPS:
        return structure_token(text)
    parts = text.split(" ")
    if len(parts) == 2:
        return stack_token(*parts)
    raise ValueError(f"unknown token mnemonic {text!r}")


ALL_ACTIONS = tuple(action_token(d) for d in Direction)
ALL_CONDITIONS = tuple(condition_token(d, c) for d in Direction for c in Cell)


@dataclass(frozen=True)
class GeneticCode:
    """Codon value -> token lookup table."""

    table: tuple[Token, ...]
    typed: bool = False

    def __post_init__(self):
        if len(self.table) != CODE_SIZE:
            raise ValueError(f"genetic code needs {CODE_SIZE} entries, got {len(self.table)}")

    def __getitem__(self, codon: int) -> Token:
        return self.table[codon]

    def __len__(self) -> int:
        return len(self.table)

    def dumps(self) -> str:
        return "".join(f"{i} {tok.mnemonic}\n" for i, tok in enumerate(self.table))


def build_genetic_code(typed: bool = False) -> GeneticCode:
    """The default 64-entry code.

    ``typed`` resolves the swap/roll/unroll codons to their node/label
    scoped variants instead of the untyped ``all`` ones.
    """
    node_scope, label_scope = ("node", "label") if typed else ("all", "all")
    table: list[Token] = []
    table += [stack_token("swap", node_scope)] * 2
    table += [stack_token("swap", label_scope)] * 2
    table += [stack_token("dup", "label")] * 2 + [stack_token("dup", "node")] * 2
    table += [stack_token("del", "label")] * 2 + [stack_token("del", "node")] * 2
    table += [
        stack_token("roll", node_scope),
        stack_token("roll", label_scope),
        stack_token("unroll", node_scope),
        stack_token("unroll", label_scope),
    ]
    table += [structure_token("node")] * 4
    table += [structure_token("connect")] * 4
    table += [structure_token("connect self")] * 3
    table += [structure_token("connect start")] * 3
    table += [structure_token("connect end")] * 2
    table += list(ALL_ACTIONS)
    table += list(ALL_CONDITIONS)
    return GeneticCode(tuple(table), typed)


def load_genetic_code(path: Union[str, Path], typed: bool = False) -> GeneticCode:
    """Read a code override file: one ``<codon-index> <token-mnemonic>`` per line.

    Blank lines and ``#`` comments are skipped. Every codon must be listed
    exactly once.
    """
    entries: dict[int, Token] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        index, _, mnemonic = line.partition(" ")
        try:
            codon = int(index)
            token = parse_mnemonic(mnemonic)
        except (ValueError, KeyError) as exc:
            raise ValueError(f"{path}:{lineno}: cannot parse {raw!r}") from exc
        if not 0 <= codon < CODE_SIZE or codon in entries:
            raise ValueError(f"{path}:{lineno}: bad or repeated codon {codon}")
        entries[codon] = token
    if len(entries) != CODE_SIZE:
        missing = sorted(set(range(CODE_SIZE)) - set(entries))
        raise ValueError(f"{path}: missing codons {missing}")
    return GeneticCode(tuple(entries[i] for i in range(CODE_SIZE)), typed)


class Encoding(enum.Enum):
    BITSTRING = "bitstring"
    INTEGER = "integer"


@dataclass(frozen=True, eq=False)
class Genome:
    """A codon string in one of the two physical encodings.

    ``payload`` holds bits (0/1) for bitstrings and codon indices for
    integer genomes; it is stored read-only.
    """

    encoding: Encoding
    payload: np.ndarray

    def __post_init__(self):
        payload = np.array(self.payload, dtype=np.uint8)
        payload.flags.writeable = False
        object.__setattr__(self, "payload", payload)
        if self.encoding is Encoding.BITSTRING:
            if payload.size % CODON_BITS:
                raise ValueError(f"bitstring length {payload.size} is not a multiple of {CODON_BITS}")
            if payload.size and payload.max() > 1:
                raise ValueError("bitstring payload must contain only 0/1")
        elif payload.size and payload.max() >= CODE_SIZE:
            raise ValueError(f"codon index out of range [0, {CODE_SIZE})")

    def __len__(self) -> int:
        if self.encoding is Encoding.BITSTRING:
            return self.payload.size // CODON_BITS
        return self.payload.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Genome):
            return NotImplemented
        return self.encoding is other.encoding and np.array_equal(self.payload, other.payload)

    def __hash__(self) -> int:
        return hash((self.encoding, self.payload.tobytes()))

    def codons(self) -> np.ndarray:
        """Codon values as an int array of length ``len(self)``."""
        if self.encoding is Encoding.INTEGER:
            return self.payload.astype(np.int64)
        return self.payload.reshape(-1, CODON_BITS).astype(np.int64) @ _BIT_WEIGHTS

    def to_integer(self) -> "Genome":
        return Genome(Encoding.INTEGER, self.codons())

    def to_bitstring(self) -> "Genome":
        return Genome(Encoding.BITSTRING, codons_to_bits(self.codons()))

    def __repr__(self) -> str:
        return f"Genome({self.encoding.value}, L={len(self)})"


def codons_to_bits(codons: Sequence[int]) -> np.ndarray:
    codons = np.asarray(codons, dtype=np.int64)
    return ((codons[:, None] & _BIT_WEIGHTS) > 0).astype(np.uint8).ravel()


def integer_genome(indices: Iterable[int]) -> Genome:
    return Genome(Encoding.INTEGER, np.fromiter(indices, dtype=np.int64))


def bitstring_genome(bits: Union[str, Iterable[int]]) -> Genome:
    if isinstance(bits, str):
        bits = [int(ch) for ch in bits if ch in "01"]
    return Genome(Encoding.BITSTRING, np.fromiter(bits, dtype=np.int64))


def translate(genome: Genome, code: GeneticCode) -> list[Token]:
    """Decode a genome into its token stream (MSB-first codons)."""
    table = code.table
    return [table[c] for c in genome.codons().tolist()]


def random_genome(encoding: Encoding, length: int, rng: np.random.Generator) -> Genome:
    if length <= 0:
        raise ValueError("genome length must be positive")
    if encoding is Encoding.BITSTRING:
        return Genome(encoding, rng.integers(0, 2, size=CODON_BITS * length))
    return Genome(encoding, rng.integers(0, CODE_SIZE, size=length))
