"""Auxiliary ℓ-graph over 4-column window labelings

Vertex u is a packed 4-column labeling; arc u -> v exists when the last three
columns of u are the first three of v and the 5-column concatenation passes
window_ok. Its length is the number of code vertices in the new column.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, TextIO, Tuple

import numpy as np

from core.errors import InvalidArgumentError, ResourceLimitError
from core.grid_topology import CodeKind, GridKind, StripSpec
from core.local_properties import (
    STATE_WIDTH,
    Side,
    WindowLabeling,
    property_checker,
)
from core.minplus import INF, MinPlusMatrix

logger = logging.getLogger(__name__)

# Published vertex counts for square-grid ID graphs, logged for comparison only
REFERENCE_VERTEX_COUNTS = {1: 10, 2: 169, 3: 2598, 4: 37791}

_ARC_BYTES = 3 * 8
_PARALLEL_MIN_VERTICES = 1 << 12


def concat(u: WindowLabeling, v: WindowLabeling) -> WindowLabeling:
    """u ▷ v: u on columns 0..3 and v on columns 1..4"""
    if u.width != STATE_WIDTH or v.width != STATE_WIDTH:
        raise InvalidArgumentError("concat expects two 4-column labelings")
    if u.height != v.height:
        raise InvalidArgumentError(f"height mismatch: {u.height} vs {v.height}")
    if u.columns[1:] != v.columns[:3]:
        raise InvalidArgumentError(f"{u.columns} is not compatible with {v.columns}")
    return WindowLabeling(u.height, u.columns + v.columns[3:])


def popcount(x: int) -> int:
    return bin(x).count("1")


def _arc_chunk(kind: CodeKind, grid: GridKind, h: int, start: int, stop: int) -> Tuple[List[int], List[int], List[int]]:
    checker = property_checker(kind, grid, h)
    shift = STATE_WIDTH * h
    src: List[int] = []
    dst: List[int] = []
    length: List[int] = []
    for u in range(start, stop):
        for x in range(1 << h):
            window = u | (x << shift)
            if checker.window_ok_bits(window):
                src.append(u)
                dst.append(window >> h)
                length.append(popcount(x))
    return src, dst, length


@dataclass(frozen=True)
class AuxGraph:
    """Directed ℓ-graph; vertices sorted by packed value, arcs sorted by (src, dst)"""

    kind: CodeKind
    grid: GridKind
    height: int
    vertices: np.ndarray = field(repr=False)
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)
    length: np.ndarray = field(repr=False)
    raw_vertex_count: int
    trimmed: bool = False

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.size)

    @property
    def arc_count(self) -> int:
        return int(self.src.size)

    @property
    def is_empty(self) -> bool:
        return self.vertex_count == 0

    @property
    def vertex_index(self) -> Dict[int, int]:
        return {int(v): i for i, v in enumerate(self.vertices)}

    def labeling(self, index: int) -> WindowLabeling:
        return WindowLabeling.from_packed(self.height, STATE_WIDTH, int(self.vertices[index]))

    def arcs(self) -> Tuple[int, np.ndarray, np.ndarray, np.ndarray]:
        return self.vertex_count, self.src, self.dst, self.length

    def arc_length(self, u: int, v: int) -> Optional[int]:
        """Length of arc between vertex indices, None when absent"""
        lo = np.searchsorted(self.src, u, side="left")
        hi = np.searchsorted(self.src, u, side="right")
        hits = np.nonzero(self.dst[lo:hi] == v)[0]
        return int(self.length[lo + hits[0]]) if hits.size else None

    def length_matrix(self, memory_cap_bytes: Optional[int] = None) -> MinPlusMatrix:
        n = self.vertex_count
        if memory_cap_bytes is not None and n * n * 8 > memory_cap_bytes:
            raise ResourceLimitError(f"a {n}x{n} length matrix needs {n * n * 8} bytes", memory_cap_bytes)
        entries = np.full((n, n), INF, dtype=np.int64)
        entries[self.src, self.dst] = self.length
        return MinPlusMatrix(entries)

    def subgraph(self, keep: np.ndarray, trimmed: bool = True) -> "AuxGraph":
        """Induced subgraph on the boolean vertex mask `keep`, reindexed in order"""
        new_index = np.cumsum(keep) - 1
        arc_keep = keep[self.src] & keep[self.dst]
        return AuxGraph(
            kind=self.kind, grid=self.grid, height=self.height,
            vertices=self.vertices[keep],
            src=new_index[self.src[arc_keep]].astype(np.int64),
            dst=new_index[self.dst[arc_keep]].astype(np.int64),
            length=self.length[arc_keep],
            raw_vertex_count=self.raw_vertex_count,
            trimmed=trimmed,
        )

    def export_text(self, out: TextIO) -> None:
        """Line-based dump: `index<TAB>hex` per vertex, `u<TAB>v<TAB>length` per arc"""
        out.write(f"# {self.kind.value} {self.grid.value} h={self.height} "
                  f"vertices={self.vertex_count} arcs={self.arc_count}\n")
        out.write("# vertices\n")
        for i, packed in enumerate(self.vertices):
            out.write(f"{i}\t{int(packed):x}\n")
        out.write("# arcs\n")
        for u, v, w in zip(self.src, self.dst, self.length):
            out.write(f"{int(u)}\t{int(v)}\t{int(w)}\n")


def build(kind: CodeKind, grid: GridKind, h: int,
          memory_cap_bytes: Optional[int] = None,
          threads: int = 1,
          progress_callback: Optional[Callable[[str], None]] = None) -> AuxGraph:
    """All 2^{4h} labelings with their compatible arcs, before trimming"""
    StripSpec(grid, h)
    n = 1 << (STATE_WIDTH * h)
    worst = (n << h) * _ARC_BYTES
    if memory_cap_bytes is not None and worst > memory_cap_bytes:
        raise ResourceLimitError(f"height {h} needs up to {worst} bytes of arcs", memory_cap_bytes)

    if progress_callback:
        progress_callback(f"building auxiliary graph over {n} labelings")

    if threads > 1 and n >= _PARALLEL_MIN_VERTICES:
        step = -(-n // (threads * 4))
        bounds = [(s, min(s + step, n)) for s in range(0, n, step)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_arc_chunk, kind, grid, h, s, e) for s, e in bounds]
            chunks = [f.result() for f in futures]
    else:
        chunks = [_arc_chunk(kind, grid, h, 0, n)]

    src = np.fromiter((u for c in chunks for u in c[0]), dtype=np.int64)
    dst = np.fromiter((v for c in chunks for v in c[1]), dtype=np.int64)
    length = np.fromiter((w for c in chunks for w in c[2]), dtype=np.int64)
    order = np.lexsort((dst, src))

    graph = AuxGraph(kind=kind, grid=grid, height=h,
                     vertices=np.arange(n, dtype=np.int64),
                     src=src[order], dst=dst[order], length=length[order],
                     raw_vertex_count=n)
    logger.debug("Built %s %s h=%d graph: %d vertices, %d arcs",
                 kind.value, grid.value, h, n, graph.arc_count)
    return graph


def trim(g: AuxGraph) -> AuxGraph:
    """Drop vertices lacking an incoming or outgoing arc until a fixpoint"""
    n = g.vertex_count
    alive = np.ones(n, dtype=bool)
    while True:
        live_arcs = alive[g.src] & alive[g.dst]
        has_out = np.bincount(g.src[live_arcs], minlength=n) > 0
        has_in = np.bincount(g.dst[live_arcs], minlength=n) > 0
        nxt = alive & has_out & has_in
        if np.array_equal(nxt, alive):
            break
        alive = nxt
    trimmed = g.subgraph(alive)
    logger.info("Trimmed %s %s h=%d graph: %d -> %d vertices",
                g.kind.value, g.grid.value, g.height, g.raw_vertex_count, trimmed.vertex_count)
    if g.kind is CodeKind.ID and g.grid is GridKind.SQUARE and g.height in REFERENCE_VERTEX_COUNTS:
        logger.info("Reference vertex count for this graph: %d", REFERENCE_VERTEX_COUNTS[g.height])
    return trimmed


def _closure(n: int, seeds: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    reached = seeds.copy()
    frontier = seeds.copy()
    while frontier.any():
        step = np.zeros(n, dtype=bool)
        step[dst[frontier[src]]] = True
        frontier = step & ~reached
        reached |= frontier
    return reached


@dataclass(frozen=True)
class AugmentedGraph:
    """Base graph plus a source s (arcs to BEGIN-valid vertices) and a sink t"""

    base: AuxGraph
    source_lengths: np.ndarray = field(repr=False)
    sink_mask: np.ndarray = field(repr=False)

    @property
    def source_arcs(self) -> Dict[int, int]:
        return {int(i): int(w) for i, w in enumerate(self.source_lengths) if w < INF}

    @property
    def sink_arcs(self) -> FrozenSet[int]:
        return frozenset(int(i) for i in np.nonzero(self.sink_mask)[0])

    @property
    def source(self) -> int:
        return self.base.vertex_count

    @property
    def sink(self) -> int:
        return self.base.vertex_count + 1

    def arcs(self) -> Tuple[int, np.ndarray, np.ndarray, np.ndarray]:
        n = self.base.vertex_count
        starts = np.nonzero(self.source_lengths < INF)[0]
        ends = np.nonzero(self.sink_mask)[0]
        src = np.concatenate([self.base.src, np.full(starts.size, n), ends]).astype(np.int64)
        dst = np.concatenate([self.base.dst, starts, np.full(ends.size, n + 1)]).astype(np.int64)
        length = np.concatenate([self.base.length, self.source_lengths[starts],
                                 np.zeros(ends.size, dtype=np.int64)]).astype(np.int64)
        return n + 2, src, dst, length

    def source_row(self) -> np.ndarray:
        """Row s of Γ"""
        n = self.base.vertex_count
        row = np.full(n + 2, INF, dtype=np.int64)
        row[:n] = self.source_lengths
        return row

    def length_matrix(self, memory_cap_bytes: Optional[int] = None) -> MinPlusMatrix:
        """Γ with s at index n and t at index n + 1"""
        n = self.base.vertex_count
        size = n + 2
        if memory_cap_bytes is not None and size * size * 8 > memory_cap_bytes:
            raise ResourceLimitError(f"a {size}x{size} length matrix needs {size * size * 8} bytes",
                                     memory_cap_bytes)
        entries = np.full((size, size), INF, dtype=np.int64)
        entries[self.base.src, self.base.dst] = self.base.length
        entries[n, :n] = self.source_lengths
        entries[:n, n + 1] = np.where(self.sink_mask, 0, INF)
        return MinPlusMatrix(entries)


def augment(g: AuxGraph) -> AugmentedGraph:
    """Attach source and sink arcs from the boundary properties"""
    checker = property_checker(g.kind, g.grid, g.height)
    begin = np.array([checker.boundary_ok_bits(int(u), Side.BEGIN) for u in g.vertices], dtype=bool)
    end = np.array([checker.boundary_ok_bits(int(u), Side.END) for u in g.vertices], dtype=bool)
    weights = np.array([popcount(int(u)) for u in g.vertices], dtype=np.int64)
    source_lengths = np.where(begin, weights, INF).astype(np.int64)
    return AugmentedGraph(base=g, source_lengths=source_lengths, sink_mask=end)


def trim_source_sink(g: AuxGraph) -> AuxGraph:
    """Keep vertices reachable from a BEGIN-valid vertex and reaching an END-valid one"""
    checker = property_checker(g.kind, g.grid, g.height)
    n = g.vertex_count
    begin = np.array([checker.boundary_ok_bits(int(u), Side.BEGIN) for u in g.vertices], dtype=bool)
    end = np.array([checker.boundary_ok_bits(int(u), Side.END) for u in g.vertices], dtype=bool)
    forward = _closure(n, begin, g.src, g.dst)
    backward = _closure(n, end, g.dst, g.src)
    kept = g.subgraph(forward & backward)
    logger.info("Source/sink trim of %s %s h=%d graph: %d -> %d vertices",
                g.kind.value, g.grid.value, g.height, n, kept.vertex_count)
    return kept


def export_graph(g: AuxGraph, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        g.export_text(f)
