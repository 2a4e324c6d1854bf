"""Graphs, graph-state generators and stabilizer groups.

Also holds the two six-qubit graphs of the two-photon experiment and the
local relabelling (the "tilde" frame) that maps the canonical linear cluster
generators onto the operators measured in the lab.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Mapping, Sequence

from .pauli import PauliError, PauliString, SingleQubitFrame, apply_frame, commutes, multiply

Subset = tuple[int, ...]


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class GraphSpec:
    """Undirected simple graph on vertices 1..n."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("graph needs at least one vertex")
        canon = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise GraphError(f"self-loop on vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise GraphError(f"edge {e} outside vertices 1..{self.n}")
            canon.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(canon))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "GraphSpec":
        edges = list(edges)
        seen = set()
        for u, v in edges:
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
        return cls(n, frozenset(edges))

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(sorted({b if a == v else a for a, b in self.edges if v in (a, b)}))

    def degrees(self) -> tuple[int, ...]:
        return tuple(len(self.neighbors(v)) for v in range(1, self.n + 1))

    def to_text(self) -> str:
        lines = [f"n={self.n}"] + [f"{u} {v}" for u, v in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GraphSpec":
        """Parse the ``n=<count>`` header plus one ``u v`` pair per line."""
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines or not lines[0].startswith("n="):
            raise GraphError("edge list must start with an 'n=<count>' header")
        try:
            n = int(lines[0][2:])
        except ValueError:
            raise GraphError(f"bad header {lines[0]!r}") from None
        edges = []
        for lineno, ln in enumerate(lines[1:], start=2):
            parts = ln.split()
            if len(parts) != 2:
                raise GraphError(f"line {lineno}: expected 'u v', got {ln!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise GraphError(f"line {lineno}: non-integer vertex in {ln!r}") from None
        return cls.from_edges(n, edges)


def generators(g: GraphSpec) -> list[PauliString]:
    """``X`` on vertex i and ``Z`` on each of its neighbours, for every vertex."""
    out = []
    for v in range(1, g.n + 1):
        terms = {v: "X"}
        terms.update({u: "Z" for u in g.neighbors(v)})
        out.append(PauliString.from_sparse(g.n, terms))
    return out


# -- subset keys -----------------------------------------------------------

def subset_key(subset: Iterable[int]) -> str:
    s = sorted(subset)
    return "*".join(f"g{i}" for i in s) if s else "I"


def parse_subset(key: str) -> Subset:
    key = key.strip()
    if key == "I":
        return ()
    out = []
    for part in key.split("*"):
        part = part.strip()
        if not (part.startswith("g") and part[1:].isdigit()) or int(part[1:]) < 1:
            raise GraphError(f"invalid subset key {key!r}")
        out.append(int(part[1:]))
    if len(set(out)) != len(out):
        raise GraphError(f"repeated generator in subset key {key!r}")
    return tuple(sorted(out))


def _as_subset(s) -> Subset:
    return parse_subset(s) if isinstance(s, str) else tuple(sorted(s))


def all_subsets(n: int) -> Iterator[Subset]:
    """Subsets of 1..n ordered by size, then lexicographically."""
    for r in range(n + 1):
        yield from combinations(range(1, n + 1), r)


@dataclass(frozen=True)
class StabilizerSet:
    """All 2**n products of n commuting generators, keyed by generator subset."""

    n: int
    elements: Mapping[Subset, PauliString]

    def __getitem__(self, subset) -> PauliString:
        return self.elements[_as_subset(subset)]

    def __iter__(self):
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def items(self):
        return self.elements.items()

    @property
    def generators(self) -> list[PauliString]:
        return [self.elements[(i,)] for i in range(1, self.n + 1)]


def _is_independent(gens: Sequence[PauliString]) -> bool:
    # Gaussian elimination over GF(2) on the concatenated (x, z) bit vectors.
    rows = [p.x | (p.z << p.n) for p in gens]
    rank = 0
    for bit in range(2 * gens[0].n if gens else 0):
        pivot = next((i for i in range(rank, len(rows)) if rows[i] >> bit & 1), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] >> bit & 1:
                rows[i] ^= rows[rank]
        rank += 1
    return rank == len(rows)


def stabilizer_group(
    gens: Sequence[PauliString],
    frame: Mapping[int, SingleQubitFrame] | None = None,
    n: int | None = None,
) -> StabilizerSet:
    """Every subset product of ``gens``, after optionally relabelling each generator."""
    gens = list(gens)
    if not gens:
        return StabilizerSet(0 if n is None else n, {(): PauliString.identity(n or 1)})
    if frame:
        gens = [apply_frame(g, frame) for g in gens]
    width = gens[0].n
    for a, b in combinations(range(len(gens)), 2):
        if gens[a].n != gens[b].n:
            raise PauliError("generators act on different qubit counts")
        if not commutes(gens[a], gens[b]):
            raise GraphError(f"generators g{a + 1} and g{b + 1} do not commute")
    if any(not g.is_hermitian for g in gens):
        raise GraphError("generators must be Hermitian")
    if not _is_independent(gens):
        raise GraphError("generators are not independent")
    elements: dict[Subset, PauliString] = {(): PauliString.identity(width)}
    for subset in all_subsets(len(gens)):
        if subset:
            elements[subset] = multiply(elements[subset[:-1]], gens[subset[-1] - 1])
    return StabilizerSet(len(gens), elements)


# -- the two-photon six-qubit graphs -------------------------------------------

_HE6_EDGES = ((1, 4), (2, 5), (3, 6))
_LC6_EXTRA = ((1, 2), (5, 6))


def builtin_graph(name: str) -> GraphSpec:
    """``HE6``: three disjoint links; ``LC6``: the path 4-1-2-5-6-3."""
    key = name.upper()
    if key == "HE6":
        return GraphSpec.from_edges(6, _HE6_EDGES)
    if key == "LC6":
        return GraphSpec.from_edges(6, _HE6_EDGES + _LC6_EXTRA)
    raise GraphError(f"unknown graph {name!r}; expected HE6 or LC6")


def tilde_frame() -> dict[int, SingleQubitFrame]:
    """X2<->Z2, X3->-Z3 with Z3->X3, X4<->Z4, X5->-X5; qubits 1 and 6 untouched."""
    return {
        2: SingleQubitFrame((1, "Z"), (1, "X")),
        3: SingleQubitFrame((-1, "Z"), (1, "X")),
        4: SingleQubitFrame((1, "Z"), (1, "X")),
        5: SingleQubitFrame((-1, "X"), (1, "Z")),
    }


def lc6_tilde_stabilizers() -> StabilizerSet:
    return stabilizer_group(generators(builtin_graph("LC6")), tilde_frame())
