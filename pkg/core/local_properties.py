"""Window properties deciding whether labelings of small substrips are code-compatible

A window of width w over a strip of height h is packed into one integer:
the vertex in row r of column c is bit c * h + r.
"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import FrozenSet, Iterable, List, Sequence, Tuple

from core.errors import InvalidArgumentError
from core.grid_topology import CodeKind, GridKind, StripSpec, Vertex, build_strip_graph

WINDOW_WIDTH = 5
STATE_WIDTH = 4


class Side(Enum):
    BEGIN = "begin"
    END = "end"


@dataclass(frozen=True)
class ColumnLabeling:
    """Labels of one column; bit r set iff row r is in the code"""

    bits: int
    height: int

    def __post_init__(self):
        if self.height < 1:
            raise InvalidArgumentError(f"height must be positive, got {self.height}")
        if not 0 <= self.bits < (1 << self.height):
            raise InvalidArgumentError(f"column bits {self.bits} do not fit height {self.height}")

    @property
    def weight(self) -> int:
        return bin(self.bits).count("1")


@dataclass(frozen=True)
class WindowLabeling:
    """Labels of a 4-column (graph vertex) or 5-column (property check) window"""

    height: int
    columns: Tuple[int, ...]

    def __post_init__(self):
        if len(self.columns) not in (STATE_WIDTH, WINDOW_WIDTH):
            raise InvalidArgumentError(f"window width must be 4 or 5, got {len(self.columns)}")
        for bits in self.columns:
            ColumnLabeling(bits, self.height)

    @classmethod
    def from_packed(cls, height: int, width: int, packed: int) -> "WindowLabeling":
        mask = (1 << height) - 1
        return cls(height, tuple((packed >> (c * height)) & mask for c in range(width)))

    @classmethod
    def from_rows(cls, rows: Sequence[str]) -> "WindowLabeling":
        """Build from strings such as ["1011", "0110"], one per row, '1' in code"""
        width = len(rows[0])
        columns = []
        for c in range(width):
            columns.append(sum(1 << r for r, line in enumerate(rows) if line[c] == "1"))
        return cls(len(rows), tuple(columns))

    @property
    def width(self) -> int:
        return len(self.columns)

    @property
    def packed(self) -> int:
        return sum(bits << (c * self.height) for c, bits in enumerate(self.columns))

    @property
    def weight(self) -> int:
        return sum(self.column(c).weight for c in range(self.width))

    def column(self, index: int) -> ColumnLabeling:
        return ColumnLabeling(self.columns[index], self.height)

    def in_code(self, v: Vertex) -> bool:
        return bool((self.columns[v.col] >> v.row) & 1)


class WindowMasks:
    """Neighborhood bitmasks of a non-circular strip of a given width"""

    def __init__(self, grid: GridKind, height: int, width: int):
        self.grid = grid
        self.height = height
        self.width = width
        graph = build_strip_graph(StripSpec(grid, height, width, circular=False))

        self.open: List[int] = [0] * (height * width)
        self.closed: List[int] = [0] * (height * width)
        for v in graph.nodes:
            bit = self.bit(v)
            mask = 0
            for w in graph.neighbors(v):
                mask |= 1 << self.bit(w)
            self.open[bit] = mask
            self.closed[bit] = mask | (1 << bit)

    def bit(self, v: Vertex) -> int:
        return v.col * self.height + v.row

    def vertex(self, bit: int) -> Vertex:
        return Vertex(bit % self.height, bit // self.height)

    def columns_bits(self, columns: Iterable[int]) -> List[int]:
        return [c * self.height + r for c in columns for r in range(self.height)]


@lru_cache(maxsize=None)
def window_masks(grid: GridKind, height: int, width: int) -> WindowMasks:
    return WindowMasks(grid, height, width)


def trace(window: WindowLabeling, grid: GridKind, v: Vertex, closed: bool = True) -> FrozenSet[Vertex]:
    """N[v] ∩ C (or N(v) ∩ C) computed inside the window"""
    if not (0 <= v.row < window.height and 0 <= v.col < window.width):
        raise InvalidArgumentError(f"{v} is outside the {window.height}x{window.width} window")
    masks = window_masks(grid, window.height, window.width)
    neighborhood = masks.closed if closed else masks.open
    hits = neighborhood[masks.bit(v)] & window.packed
    return frozenset(masks.vertex(b) for b in range(window.height * window.width) if (hits >> b) & 1)


class PropertyChecker:
    """Decides window_ok / boundary_ok on packed labelings for one (kind, grid, height)"""

    def __init__(self, kind: CodeKind, grid: GridKind, height: int):
        StripSpec(grid, height)
        self.kind = kind
        self.grid = grid
        self.height = height

        window = window_masks(grid, height, WINDOW_WIDTH)
        state = window_masks(grid, height, STATE_WIDTH)
        self._window = self._plan(window, range(1, 4))
        self._begin = self._plan(state, range(0, 3))
        self._end = self._plan(state, range(1, 4))

    def _plan(self, masks: WindowMasks, columns: Iterable[int]) -> Tuple[Tuple[int, int, int], ...]:
        dom = masks.open if self.kind.total else masks.closed
        return tuple((b, dom[b], masks.closed[b]) for b in masks.columns_bits(columns))

    def _holds(self, plan: Tuple[Tuple[int, int, int], ...], labels: int) -> bool:
        kind = self.kind
        seen = set()
        for bit, dom_mask, closed_mask in plan:
            if not dom_mask & labels:
                return False
            if kind.separates_all or (kind.separates_non_code and not (labels >> bit) & 1):
                t = closed_mask & labels
                if t in seen:
                    return False
                seen.add(t)
        return True

    def window_ok_bits(self, labels: int) -> bool:
        return self._holds(self._window, labels)

    def boundary_ok_bits(self, labels: int, side: Side) -> bool:
        return self._holds(self._begin if side is Side.BEGIN else self._end, labels)


@lru_cache(maxsize=None)
def property_checker(kind: CodeKind, grid: GridKind, height: int) -> PropertyChecker:
    return PropertyChecker(kind, grid, height)


def window_ok(kind: CodeKind, grid: GridKind, h: int, window: WindowLabeling) -> bool:
    """Domination and separation of the three middle columns of a 5-column window"""
    if window.width != WINDOW_WIDTH:
        raise InvalidArgumentError(f"window_ok needs a width-5 window, got width {window.width}")
    if window.height != h:
        raise InvalidArgumentError(f"window height {window.height} does not match h={h}")
    return property_checker(kind, grid, h).window_ok_bits(window.packed)


def boundary_ok(kind: CodeKind, grid: GridKind, h: int, window: WindowLabeling, side: Side) -> bool:
    """Domination and separation of the first (BEGIN) or last (END) three columns of a 4-column window"""
    if window.width != STATE_WIDTH:
        raise InvalidArgumentError(f"boundary_ok needs a width-4 window, got width {window.width}")
    if window.height != h:
        raise InvalidArgumentError(f"window height {window.height} does not match h={h}")
    return property_checker(kind, grid, h).boundary_ok_bits(window.packed, side)
