import itertools

import pytest

from conftest import ALL_KINDS, PLANAR_GRIDS, all_labelings, circular_windows
from core.errors import InvalidArgumentError
from core.grid_topology import CodeKind, GridKind, StripSpec, Vertex, build_strip_graph
from core.local_properties import (
    ColumnLabeling,
    Side,
    WindowLabeling,
    boundary_ok,
    property_checker,
    trace,
    window_ok,
)
from core.oracle import ExplicitCode, check_code, dominated, is_code, separated


def clauses_hold(graph, code, kind, vertices):
    """Domination and separation restricted to `vertices`, checked on the explicit graph"""
    if not all(dominated(graph, v, code, kind.total) for v in vertices):
        return False
    if not kind.separates:
        return True
    pool = vertices if kind.separates_all else [v for v in vertices if v not in code]
    return all(separated(graph, u, v, code) for u, v in itertools.combinations(pool, 2))


class TestLabelings:
    def test_column_weight(self):
        assert ColumnLabeling(0b101, 3).weight == 2

    def test_column_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            ColumnLabeling(4, 2)

    def test_from_rows(self):
        w = WindowLabeling.from_rows(["10110", "01100"])
        assert w.width == 5
        assert w.columns == (1, 2, 3, 1, 0)
        assert w.weight == 5
        assert w.column(2) == ColumnLabeling(0b11, 2)
        assert w.column(4).weight == 0
        assert w.in_code(Vertex(0, 0)) and not w.in_code(Vertex(1, 0))

    def test_packed_round_trip(self):
        w = WindowLabeling.from_rows(["1011", "0110"])
        assert WindowLabeling.from_packed(2, 4, w.packed) == w

    def test_bad_width(self):
        with pytest.raises(InvalidArgumentError):
            WindowLabeling(1, (1, 0, 1))


class TestTrace:
    def test_closed_and_open(self):
        w = WindowLabeling.from_rows(["11011"])
        assert trace(w, GridKind.SQUARE, Vertex(0, 1)) == {Vertex(0, 0), Vertex(0, 1)}
        assert trace(w, GridKind.SQUARE, Vertex(0, 1), closed=False) == {Vertex(0, 0)}

    def test_outside_window(self):
        with pytest.raises(InvalidArgumentError):
            trace(WindowLabeling.from_rows(["11011"]), GridKind.SQUARE, Vertex(0, 5))


class TestWindowOk:
    def test_all_zero_fails_everywhere(self):
        zero = WindowLabeling(2, (0,) * 5)
        for kind in ALL_KINDS:
            assert not window_ok(kind, GridKind.SQUARE, 2, zero)

    def test_all_ones_is_dominating(self):
        ones = WindowLabeling(2, (3,) * 5)
        assert window_ok(CodeKind.D, GridKind.KING, 2, ones)
        assert window_ok(CodeKind.TD, GridKind.KING, 2, ones)

    def test_king_height_two_cannot_identify(self):
        for packed in range(1 << 10):
            assert not window_ok(CodeKind.ID, GridKind.KING, 2, WindowLabeling.from_packed(2, 5, packed))

    def test_width_checked(self):
        with pytest.raises(InvalidArgumentError):
            window_ok(CodeKind.ID, GridKind.SQUARE, 1, WindowLabeling.from_rows(["1011"]))

    def test_height_checked(self):
        with pytest.raises(InvalidArgumentError):
            window_ok(CodeKind.ID, GridKind.SQUARE, 2, WindowLabeling.from_rows(["10110"]))

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("grid", PLANAR_GRIDS)
    @pytest.mark.parametrize("h", [1, 2])
    def test_matches_definition_on_middle_columns(self, kind, grid, h):
        graph = build_strip_graph(StripSpec(grid, h, 5))
        middle = [Vertex(r, c) for c in range(1, 4) for r in range(h)]
        checker = property_checker(kind, grid, h)
        for packed in range(1 << (5 * h)):
            code = WindowLabeling.from_packed(h, 5, packed)
            members = frozenset(v for v in graph.nodes if code.in_code(v))
            assert checker.window_ok_bits(packed) == clauses_hold(graph, members, kind, middle), packed


class TestBoundaryOk:
    def test_begin_and_end_columns(self):
        graph = build_strip_graph(StripSpec(GridKind.SQUARE, 2, 4))
        for side, cols in ((Side.BEGIN, range(0, 3)), (Side.END, range(1, 4))):
            vertices = [Vertex(r, c) for c in cols for r in range(2)]
            for packed in range(1 << 8):
                w = WindowLabeling.from_packed(2, 4, packed)
                members = frozenset(v for v in graph.nodes if w.in_code(v))
                expected = clauses_hold(graph, members, CodeKind.ID, vertices)
                assert boundary_ok(CodeKind.ID, GridKind.SQUARE, 2, w, side) == expected

    def test_king_height_two_never_both(self):
        for packed in range(1 << 8):
            w = WindowLabeling.from_packed(2, 4, packed)
            assert not (boundary_ok(CodeKind.ID, GridKind.KING, 2, w, Side.BEGIN)
                        and boundary_ok(CodeKind.ID, GridKind.KING, 2, w, Side.END))

    def test_width_checked(self):
        with pytest.raises(InvalidArgumentError):
            boundary_ok(CodeKind.ID, GridKind.SQUARE, 1, WindowLabeling.from_rows(["10110"]), Side.BEGIN)


def circular_sizes():
    for h, size in [(1, s) for s in range(5, 10)] + [(2, 5), (2, 6)]:
        yield h, size
    for size in (7, 8):
        yield pytest.param(2, size, marks=pytest.mark.slow)


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("grid", PLANAR_GRIDS)
@pytest.mark.parametrize("h, size", list(circular_sizes()))
def test_circular_code_iff_every_window_ok(kind, grid, h, size):
    strip = StripSpec(grid, h, size, circular=True)
    graph = build_strip_graph(strip)
    checker = property_checker(kind, grid, h)
    for cells in all_labelings(h, size):
        code = ExplicitCode.from_cells(strip, cells).members
        local = all(checker.window_ok_bits(w) for w in circular_windows(cells))
        assert local == check_code(graph, code, kind), cells


# stronger kind on the left
KIND_LADDER = [
    (CodeKind.ID, CodeKind.LD),
    (CodeKind.LTD, CodeKind.LD),
    (CodeKind.LTD, CodeKind.TD),
    (CodeKind.ID, CodeKind.D),
    (CodeKind.LD, CodeKind.D),
    (CodeKind.TD, CodeKind.D),
]


@pytest.mark.parametrize("grid", PLANAR_GRIDS)
@pytest.mark.parametrize("h", [1, 2])
def test_window_kind_ladder(grid, h):
    checkers = {kind: property_checker(kind, grid, h) for kind in ALL_KINDS}
    for packed in range(1 << (5 * h)):
        ok = {kind: checker.window_ok_bits(packed) for kind, checker in checkers.items()}
        for stronger, weaker in KIND_LADDER:
            assert not ok[stronger] or ok[weaker], (stronger, weaker, packed)


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("grid", PLANAR_GRIDS)
@pytest.mark.parametrize("h", [1, 2])
def test_window_ok_survives_adding_code_vertices(kind, grid, h):
    checker = property_checker(kind, grid, h)
    bits = 5 * h
    for packed in range(1 << bits):
        if not checker.window_ok_bits(packed):
            continue
        for b in range(bits):
            assert checker.window_ok_bits(packed | (1 << b)), (packed, b)


def test_is_code_agrees_with_check_code():
    strip = StripSpec(GridKind.SQUARE, 1, 6, circular=True)
    code = ExplicitCode.from_cells(strip, [[1, 1, 0, 1, 1, 0]])
    assert is_code(code, CodeKind.ID) == check_code(build_strip_graph(strip), code.members, CodeKind.ID)
