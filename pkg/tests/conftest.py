import itertools

import pytest

from core.grid_topology import CodeKind, GridKind
from core.solver import StripCodeSolver
from utils.config import RunConfig

GIB = 1024 ** 3


def make_run_config(store_dir, compress=False, **overrides):
    values = dict(
        threads=2,
        power_cap=1000,
        store_dir=str(store_dir),
        memory_cap_bytes=4 * GIB,
        oracle_cap_vertices=20,
        compress_store=compress,
        in_memory_store=False,
    )
    values.update(overrides)
    return RunConfig(**values)


@pytest.fixture
def run_config(tmp_path):
    return make_run_config(tmp_path / "powers")


@pytest.fixture
def solver(run_config):
    return StripCodeSolver(run_config)


@pytest.fixture(scope="session")
def shared_solver(tmp_path_factory):
    """One solver for the reproduction tests so graphs and powers are built once"""
    store = tmp_path_factory.mktemp("shared-powers")
    return StripCodeSolver(make_run_config(store, compress=True))


def ceil_div(a, b):
    return -(-a // b)


def circular_windows(cells, width=5):
    """Packed width-`width` windows of a circular labeling, one per start column"""
    h = len(cells)
    size = len(cells[0])
    windows = []
    for start in range(size):
        packed = 0
        for offset in range(width):
            c = (start + offset) % size
            for r in range(h):
                if cells[r][c]:
                    packed |= 1 << (offset * h + r)
        windows.append(packed)
    return windows


def all_labelings(h, size):
    for bits in itertools.product((0, 1), repeat=h * size):
        yield [list(bits[r * size:(r + 1) * size]) for r in range(h)]


ALL_KINDS = list(CodeKind)
PLANAR_GRIDS = [GridKind.SQUARE, GridKind.TRIANGULAR, GridKind.KING]


@pytest.fixture(scope="session")
def memory_solver(tmp_path_factory):
    """Session solver keeping powers in memory, for the small heights"""
    return StripCodeSolver(make_run_config(tmp_path_factory.mktemp("unused"), in_memory_store=True))
