"""Periodic optimal patterns for infinite strips read off a minimum-mean circuit"""
import logging
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from core.answer import format_fraction
from core.aux_graph import AuxGraph, concat
from core.errors import ConsistencyError, InvalidArgumentError
from core.grid_topology import CodeKind, GridKind, StripSpec
from core.local_properties import STATE_WIDTH, WindowLabeling
from core.oracle import ExplicitCode, is_code

logger = logging.getLogger(__name__)

MIN_TILED_WIDTH = 5


@dataclass(frozen=True)
class PatternGrid:
    """One period of a horizontally periodic code; cells[r][c] == 1 means in code"""

    height: int
    period: int
    cells: Tuple[Tuple[int, ...], ...]
    density: Fraction

    @property
    def weight(self) -> int:
        return sum(sum(row) for row in self.cells)

    def tiled(self, copies: int) -> List[List[int]]:
        return [list(row) * copies for row in self.cells]

    def render(self, kind: Optional[CodeKind] = None, grid: Optional[GridKind] = None) -> str:
        """Header line then one line per row, 'X' in code and '.' outside"""
        header = " ".join([
            "#",
            kind.value if kind else "-",
            grid.value if grid else "-",
            str(self.height),
            str(self.period),
            f"density={format_fraction(self.density)}",
        ])
        lines = ["".join("X" if bit else "." for bit in row) for row in self.cells]
        return "\n".join([header] + lines) + "\n"


def _critical_arcs(g: AuxGraph, lam: Fraction) -> np.ndarray:
    """Mask of arcs tight under potentials for lengths den*w - num"""
    n, src, dst, w = g.arcs()
    reduced = lam.denominator * w - lam.numerator
    potential = np.zeros(n, dtype=np.int64)
    for _ in range(n + 1):
        candidate = potential[src] + reduced
        nxt = potential.copy()
        np.minimum.at(nxt, dst, candidate)
        if np.array_equal(nxt, potential):
            break
        potential = nxt
    else:
        raise ConsistencyError(f"a circuit of mean below {format_fraction(lam)} exists")
    return potential[src] + reduced == potential[dst]


def extract_min_mean_cycle(g: AuxGraph, lam: Fraction) -> List[int]:
    """Vertex indices of an elementary circuit of mean exactly `lam`.

    Starts at the smallest vertex lying on a tight circuit and follows the
    shortest tight path back, visiting successors in ascending order.
    """
    tight = _critical_arcs(g, lam)
    _, src, dst, _ = g.arcs()
    digraph = nx.DiGraph()
    digraph.add_edges_from(zip(src[tight].tolist(), dst[tight].tolist()))

    on_cycle = set()
    for component in nx.strongly_connected_components(digraph):
        if len(component) > 1:
            on_cycle.update(component)
        else:
            (v,) = component
            if digraph.has_edge(v, v):
                on_cycle.add(v)
    if not on_cycle:
        raise ConsistencyError(f"no circuit of mean {format_fraction(lam)} in the graph")

    start = min(on_cycle)
    if digraph.has_edge(start, start):
        return [start]

    parent = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in sorted(digraph.successors(u)):
            if v == start:
                path = [u]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            if v not in parent and v in on_cycle:
                parent[v] = u
                queue.append(v)
    raise ConsistencyError(f"vertex {start} has no tight circuit through it")


def cycle_to_pattern(cycle: Sequence[WindowLabeling]) -> PatternGrid:
    """One new column per arc over a full traversal of the circuit"""
    if not cycle:
        raise InvalidArgumentError("an empty cycle has no pattern")
    h = cycle[0].height
    k = len(cycle)
    columns = []
    for i in range(k):
        u, v = cycle[i], cycle[(i + 1) % k]
        try:
            window = concat(u, v)
        except InvalidArgumentError as e:
            raise ConsistencyError(f"cycle step {i} is not a compatible pair: {e}") from e
        columns.append(window.columns[STATE_WIDTH])
    cells = tuple(tuple((bits >> r) & 1 for bits in columns) for r in range(h))
    weight = sum(sum(row) for row in cells)
    return PatternGrid(height=h, period=k, cells=cells, density=Fraction(weight, h * k))


def tiling_copies(period: int) -> int:
    return max(3, math.ceil(MIN_TILED_WIDTH / period))


def verify_pattern(p: PatternGrid, kind: CodeKind, grid: GridKind) -> bool:
    """Tile `p` around a circular strip and check it with the oracle"""
    if p.weight == 0:
        return False
    if Fraction(p.weight, p.height * p.period) != p.density:
        return False
    copies = tiling_copies(p.period)
    try:
        strip = StripSpec(grid, p.height, p.period * copies, circular=True)
    except InvalidArgumentError:
        return False
    return is_code(ExplicitCode.from_cells(strip, p.tiled(copies)), kind)


def extract_pattern(g: AuxGraph, lam: Fraction) -> PatternGrid:
    cycle = extract_min_mean_cycle(g, lam)
    pattern = cycle_to_pattern([g.labeling(i) for i in cycle])
    logger.info("Extracted a period-%d pattern of density %s", pattern.period, format_fraction(pattern.density))
    return pattern
