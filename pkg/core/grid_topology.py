"""Grid topologies, strip shapes and strip graphs"""
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Optional, Tuple

import networkx as nx

from core.errors import InvalidArgumentError


class GridKind(Enum):
    """The four grid topologies a strip can be cut from"""

    SQUARE = "square"
    TRIANGULAR = "triangular"
    KING = "king"
    TOROIDAL = "toroidal"

    @property
    def min_height(self) -> int:
        return 3 if self is GridKind.TOROIDAL else 1


class CodeKind(Enum):
    """Domination-like code notions"""

    D = "d"
    TD = "td"
    LD = "ld"
    LTD = "ltd"
    ID = "id"

    @property
    def total(self) -> bool:
        """True when domination uses open neighborhoods"""
        return self in (CodeKind.TD, CodeKind.LTD)

    @property
    def separates_all(self) -> bool:
        return self is CodeKind.ID

    @property
    def separates_non_code(self) -> bool:
        return self in (CodeKind.LD, CodeKind.LTD)

    @property
    def separates(self) -> bool:
        return self.separates_all or self.separates_non_code


_SQUARE_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_TRIANGULAR_EXTRA = ((1, -1), (-1, 1))
_KING_EXTRA = ((1, 1), (-1, -1))


@dataclass(frozen=True)
class StripSpec:
    """A strip of a grid; size None means the infinite strip"""

    grid: GridKind
    height: int
    size: Optional[int] = None
    circular: bool = False

    def __post_init__(self):
        if self.height < 1:
            raise InvalidArgumentError(f"height must be positive, got {self.height}")
        if self.height < self.grid.min_height:
            raise InvalidArgumentError(
                f"{self.grid.value} strips require height >= {self.grid.min_height}, got {self.height}")
        if self.size is not None and self.size < 1:
            raise InvalidArgumentError(f"size must be positive, got {self.size}")
        if self.circular:
            if self.size is None:
                raise InvalidArgumentError("a circular strip must have a finite size")
            if self.size < 3:
                raise InvalidArgumentError(f"circular strips require size >= 3, got {self.size}")

    @property
    def is_infinite(self) -> bool:
        return self.size is None

    @property
    def vertex_count(self) -> int:
        if self.size is None:
            raise InvalidArgumentError("an infinite strip has no vertex count")
        return self.height * self.size


@dataclass(frozen=True, order=True)
class Vertex:
    """0-based (row, col) position in a strip"""

    row: int
    col: int


def neighbor_offsets(grid: GridKind, h: int, row: int) -> FrozenSet[Tuple[int, int]]:
    """Open-neighborhood offsets of a vertex in `row` of an infinite strip.

    For toroidal strips the returned row offsets are meant modulo h; every other
    grid drops offsets that leave [0, h).
    """
    if h < grid.min_height:
        raise InvalidArgumentError(f"{grid.value} strips require height >= {grid.min_height}, got {h}")
    if not 0 <= row < h:
        raise InvalidArgumentError(f"row {row} outside [0, {h})")

    offsets = list(_SQUARE_OFFSETS)
    if grid in (GridKind.TRIANGULAR, GridKind.KING):
        offsets.extend(_TRIANGULAR_EXTRA)
    if grid is GridKind.KING:
        offsets.extend(_KING_EXTRA)

    if grid is GridKind.TOROIDAL:
        return frozenset(offsets)
    return frozenset((dr, dc) for dr, dc in offsets if 0 <= row + dr < h)


def build_strip_graph(spec: StripSpec) -> nx.Graph:
    """Explicit graph of a finite (possibly circular) strip with Vertex nodes"""
    if spec.size is None:
        raise InvalidArgumentError("cannot build an explicit graph for an infinite strip")

    h, size = spec.height, spec.size
    graph = nx.Graph(grid=spec.grid, height=h, size=size, circular=spec.circular)
    graph.add_nodes_from(Vertex(r, c) for c in range(size) for r in range(h))

    for c in range(size):
        for r in range(h):
            for dr, dc in neighbor_offsets(spec.grid, h, r):
                nr, nc = r + dr, c + dc
                if spec.grid is GridKind.TOROIDAL:
                    nr %= h
                if spec.circular:
                    nc %= size
                elif not 0 <= nc < size:
                    continue
                graph.add_edge(Vertex(r, c), Vertex(nr, nc))
    return graph
