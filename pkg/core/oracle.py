"""Definition-level code checks and exhaustive minimisation on explicit strips"""
import itertools
import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional

import networkx as nx

from core.answer import Answer
from core.errors import InvalidArgumentError, ResourceLimitError
from core.grid_topology import CodeKind, StripSpec, Vertex, build_strip_graph

logger = logging.getLogger(__name__)

DEFAULT_ORACLE_CAP = 20


@dataclass(frozen=True)
class ExplicitCode:
    """A subset of the vertices of a finite strip"""

    strip: StripSpec
    members: FrozenSet[Vertex]

    def __post_init__(self):
        if self.strip.size is None:
            raise InvalidArgumentError("explicit codes live on finite strips")
        h, size = self.strip.height, self.strip.size
        for v in self.members:
            if not (0 <= v.row < h and 0 <= v.col < size):
                raise InvalidArgumentError(f"{v} is not a vertex of the {h}x{size} strip")

    @classmethod
    def from_cells(cls, strip: StripSpec, cells: Iterable[Iterable[int]]) -> "ExplicitCode":
        """Build from an h x size 0/1 array (rows first)"""
        members = frozenset(Vertex(r, c) for r, row in enumerate(cells) for c, bit in enumerate(row) if bit)
        return cls(strip, members)

    @classmethod
    def full(cls, strip: StripSpec) -> "ExplicitCode":
        return cls(strip, frozenset(Vertex(r, c) for c in range(strip.size) for r in range(strip.height)))

    def __len__(self) -> int:
        return len(self.members)


def dominated(graph: nx.Graph, v: Vertex, code: FrozenSet[Vertex], total: bool) -> bool:
    neighborhood = set(graph[v]) if total else set(graph[v]) | {v}
    return bool(neighborhood & code)


def separated(graph: nx.Graph, u: Vertex, v: Vertex, code: FrozenSet[Vertex]) -> bool:
    return (set(graph[u]) | {u}) & code != (set(graph[v]) | {v}) & code


def check_code(graph: nx.Graph, code: FrozenSet[Vertex], kind: CodeKind) -> bool:
    for v in graph.nodes:
        if not dominated(graph, v, code, kind.total):
            return False
    if not kind.separates:
        return True
    candidates = list(graph.nodes) if kind.separates_all else [v for v in graph.nodes if v not in code]
    for u, v in itertools.combinations(candidates, 2):
        if not separated(graph, u, v, code):
            return False
    return True


def is_code(c: ExplicitCode, kind: CodeKind) -> bool:
    """Literal check of the domination and separation clauses for `kind`"""
    return check_code(build_strip_graph(c.strip), c.members, kind)


class _MaskedStrip:
    """Bitmask view of a strip graph; vertex i is bit i"""

    def __init__(self, graph: nx.Graph):
        self.vertices: List[Vertex] = sorted(graph.nodes, key=lambda v: (v.col, v.row))
        index = {v: i for i, v in enumerate(self.vertices)}
        self.open: List[int] = []
        self.closed: List[int] = []
        for i, v in enumerate(self.vertices):
            mask = 0
            for w in graph[v]:
                mask |= 1 << index[w]
            self.open.append(mask)
            self.closed.append(mask | (1 << i))

    def holds(self, kind: CodeKind, labels: int) -> bool:
        dom = self.open if kind.total else self.closed
        for mask in dom:
            if not mask & labels:
                return False
        if not kind.separates:
            return True
        seen = set()
        for i, mask in enumerate(self.closed):
            if kind.separates_non_code and (labels >> i) & 1:
                continue
            t = mask & labels
            if t in seen:
                return False
            seen.add(t)
        return True

    def members(self, labels: int) -> FrozenSet[Vertex]:
        return frozenset(v for i, v in enumerate(self.vertices) if (labels >> i) & 1)


def brute_min(strip: StripSpec, kind: CodeKind, cap: int = DEFAULT_ORACLE_CAP) -> Answer:
    """Exact minimum by subset search in increasing cardinality"""
    if strip.size is None:
        raise InvalidArgumentError("brute force needs a finite strip")
    n = strip.vertex_count
    if n > cap:
        raise ResourceLimitError(f"strip has {n} vertices", cap)

    masked = _MaskedStrip(build_strip_graph(strip))
    full = (1 << n) - 1
    if not masked.holds(kind, full):
        logger.debug("No %s-code on %s: the full vertex set fails", kind.value, strip)
        return Answer.infeasible(method="oracle")

    for size in range(n + 1):
        for chosen in itertools.combinations(range(n), size):
            labels = 0
            for i in chosen:
                labels |= 1 << i
            if masked.holds(kind, labels):
                witness = sorted(masked.members(labels))
                return Answer(size, {"method": "oracle", "witness": [[v.row, v.col] for v in witness]})
    return Answer(n, {"method": "oracle"})


def witness_code(strip: StripSpec, answer: Answer) -> Optional[ExplicitCode]:
    """Rebuild the ExplicitCode recorded by brute_min"""
    cells = answer.certificate.get("witness")
    if cells is None:
        return None
    return ExplicitCode(strip, frozenset(Vertex(r, c) for r, c in cells))
