import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from core.aux_graph import build, trim
from core.errors import (
    InvalidArgumentError,
    MatrixOverflowError,
    PowerStoreError,
    ResourceLimitError,
    StabilityNotFoundError,
)
from core.grid_topology import CodeKind, GridKind
from core.minplus import (
    INF,
    MinPlusMatrix,
    NoCircuit,
    NotFoundWithinCap,
    StabilityCert,
    detect_stability,
    matrix_digest,
    min_mean_cycle,
    mul,
    normalize,
    power_at,
    power_sequence,
    row_orbit,
)
from core.power_store import DiskPowerStore, MemoryPowerStore

inf = math.inf


def square_id(h):
    return trim(build(CodeKind.ID, GridKind.SQUARE, h)).length_matrix()


def accepts(cert, p, c):
    """(p', c') certifies the same λ with a period dividing or multiplying p"""
    return (Fraction(cert.c, cert.p) == Fraction(c, p)
            and (p % cert.p == 0 or cert.p % p == 0))


class TestMul:
    def test_identity(self):
        a = MinPlusMatrix.from_rows([[0, 3, inf], [1, inf, 2], [inf, 4, 0]])
        assert a @ MinPlusMatrix.identity(3) == a
        assert MinPlusMatrix.identity(3) @ a == a

    def test_idempotent_upper_triangular(self):
        a = MinPlusMatrix.from_rows([[0, 1], [inf, 0]])
        assert mul(a, a) == a

    def test_square(self):
        a = MinPlusMatrix.from_rows([[inf, 1], [2, inf]])
        assert (a @ a).to_rows() == [[3, inf], [inf, 3]]

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            MinPlusMatrix.identity(2) @ MinPlusMatrix.identity(3)

    def test_overflow_raises(self):
        big = MinPlusMatrix(np.array([[INF - 1]], dtype=np.int64))
        with pytest.raises(MatrixOverflowError):
            big @ big

    def test_rejects_negative_entries(self):
        with pytest.raises(InvalidArgumentError):
            MinPlusMatrix.from_rows([[-1]])

    def test_associative_on_small_matrices(self):
        rng = np.random.default_rng(7)
        values = np.array([0, 1, 2, INF], dtype=np.int64)
        for n in (1, 2, 3):
            for _ in range(200):
                a, b, c = (MinPlusMatrix(values[rng.integers(0, 4, size=(n, n))]) for _ in range(3))
                assert (a @ b) @ c == a @ (b @ c)

    def test_powers_are_minimum_walks(self):
        rng = np.random.default_rng(11)
        for n in range(1, 7):
            entries = np.where(rng.random((n, n)) < 0.5, rng.integers(0, 4, size=(n, n)), INF)
            pi = MinPlusMatrix(entries)
            power = pi
            for k in range(1, 7):
                for i, j in itertools.product(range(n), repeat=2):
                    best = INF
                    for walk in itertools.product(range(n), repeat=k - 1):
                        path = (i,) + walk + (j,)
                        steps = [entries[path[s], path[s + 1]] for s in range(k)]
                        if all(x < INF for x in steps):
                            best = min(best, int(sum(steps)))
                    assert power.entries[i, j] == best
                if n > 4 and k >= 4:
                    break
                power = power @ pi


class TestPowerSequence:
    def test_all_infinite(self):
        pi = MinPlusMatrix.from_rows([[inf, inf], [inf, inf]])
        powers = list(power_sequence(pi, 3))
        assert all(p.offset is None for p in powers)

    def test_single_loop(self):
        pi = MinPlusMatrix.from_rows([[2]])
        powers = list(power_sequence(pi, 4))
        assert [p.offset for p in powers] == [2, 4, 6, 8]
        assert all(p.normalized.tolist() == [[0]] for p in powers)

    def test_persists_each_power(self):
        store = MemoryPowerStore()
        list(power_sequence(MinPlusMatrix.from_rows([[1, 0], [0, 1]]), 5, store))
        assert store.max_exponent() == 5

    def test_cap_validated(self):
        with pytest.raises(InvalidArgumentError):
            list(power_sequence(MinPlusMatrix.identity(1), 0))

    def test_normalize_keeps_pattern(self):
        raw = np.array([[3, INF], [5, 4]], dtype=np.int64)
        p = normalize(raw, 1)
        assert p.offset == 3
        assert p.normalized.tolist() == [[0, INF], [2, 1]]
        assert p.matrix().entries.tolist() == raw.tolist()


class TestStability:
    def test_square_id_height_one(self):
        cert = detect_stability(square_id(1))
        assert isinstance(cert, StabilityCert)
        assert accepts(cert, 2, 1)
        assert cert.lam == Fraction(1, 2)

    def test_square_id_height_two(self):
        cert = detect_stability(square_id(2))
        assert accepts(cert, 7, 6)

    def test_acyclic_has_no_circuit(self):
        pi = MinPlusMatrix.from_rows([[inf, 1], [inf, inf]])
        assert isinstance(detect_stability(pi), NoCircuit)

    def test_empty_matrix_has_no_circuit(self):
        assert isinstance(detect_stability(MinPlusMatrix.from_rows([[inf]])), NoCircuit)

    def test_not_found_within_cap(self):
        # two loops of different means in separate components never normalise to a repeat
        pi = MinPlusMatrix.from_rows([[1, inf], [inf, 2]])
        outcome = detect_stability(pi, cap=20)
        assert outcome == NotFoundWithinCap(cap=20)

    def test_cap_validated(self):
        with pytest.raises(InvalidArgumentError):
            detect_stability(MinPlusMatrix.identity(1), cap=1)

    def test_certificate_holds_beyond_detection(self):
        pi = square_id(2)
        store = MemoryPowerStore()
        cert = detect_stability(pi, store=store)
        direct = pi
        for _ in range(cert.u + 2 * cert.p - 1):
            direct = direct @ pi
        k = cert.u + 2 * cert.p
        assert power_at(pi, cert, store, k).matrix() == direct

    def test_lambda_matches_karp(self):
        for h in (1, 2):
            g = trim(build(CodeKind.LD, GridKind.SQUARE, h))
            cert = detect_stability(g.length_matrix())
            assert cert.lam == min_mean_cycle(g)

    def test_resumes_from_disk(self, tmp_path):
        pi = square_id(2)
        first = detect_stability(pi, store=DiskPowerStore(str(tmp_path / "store"), compress=False))
        store = DiskPowerStore(str(tmp_path / "store"), compress=False)
        assert store.load_certificate() == first
        assert detect_stability(pi, store=store) == first

    def test_store_rebinds_for_other_matrix(self, tmp_path):
        store = DiskPowerStore(str(tmp_path / "store"), compress=False)
        detect_stability(square_id(1), store=store)
        cert = detect_stability(square_id(2), store=store)
        assert accepts(cert, 7, 6)

    def test_refuses_a_store_held_by_another_run(self, tmp_path):
        pi = square_id(1)
        with DiskPowerStore(str(tmp_path / "store")).exclusive():
            with pytest.raises(PowerStoreError):
                detect_stability(pi, store=DiskPowerStore(str(tmp_path / "store")))
        assert accepts(detect_stability(pi, store=DiskPowerStore(str(tmp_path / "store"))), 2, 1)

    def test_memory_cap_stops_the_power_sequence(self):
        pi = square_id(2)
        store = MemoryPowerStore(memory_cap_bytes=3 * pi.entries.nbytes)
        with pytest.raises(ResourceLimitError) as excinfo:
            detect_stability(pi, store=store)
        assert excinfo.value.cap == 3 * pi.entries.nbytes
        assert store.nbytes <= 3 * pi.entries.nbytes


class TestPowerAt:
    def test_prefix_is_stored_power(self):
        pi = square_id(1)
        store = MemoryPowerStore()
        cert = detect_stability(pi, store=store)
        for k in range(1, cert.u + cert.p):
            assert power_at(pi, cert, store, k) is store.load(k)

    @pytest.mark.parametrize("h, p, c", [(1, 2, 1), (2, 7, 6)])
    def test_offsets_shift_by_transfer(self, h, p, c):
        pi = square_id(h)
        store = MemoryPowerStore()
        cert = detect_stability(pi, store=store)
        for k in range(cert.u, cert.u + 3 * p):
            shifted = power_at(pi, cert, store, k + p)
            assert shifted.offset - power_at(pi, cert, store, k).offset == c

    def test_rejects_zero(self):
        pi = square_id(1)
        store = MemoryPowerStore()
        cert = detect_stability(pi, store=store)
        with pytest.raises(InvalidArgumentError):
            power_at(pi, cert, store, 0)


class TestRowOrbit:
    def test_cycle(self):
        pi = MinPlusMatrix.from_rows([[inf, 1], [2, inf]])
        orbit = row_orbit(pi.entries[0], pi)
        assert orbit.cert is not None
        assert [orbit.entry(k, 0) for k in (2, 4, 6)] == [3, 6, 9]
        assert orbit.entry(3, 1) == 4
        assert orbit.entry(3, 0) is None

    def test_dead_row(self):
        pi = MinPlusMatrix.from_rows([[inf, 1], [inf, inf]])
        orbit = row_orbit(pi.entries[0], pi)
        assert orbit.dead_from == 2
        assert orbit.entry(10, 1) is None

    def test_cap_reached(self):
        pi = MinPlusMatrix.from_rows([[1, inf], [inf, 2]])
        orbit = row_orbit(np.array([1, 2], dtype=np.int64), pi, cap=5)
        assert orbit.cert is None and orbit.dead_from is None
        assert orbit.entry(3, 1) == 6
        with pytest.raises(StabilityNotFoundError):
            orbit.at(50)


class TestMinMeanCycle:
    def test_self_loop(self):
        assert min_mean_cycle(MinPlusMatrix.from_rows([[3]])) == Fraction(3)

    def test_two_circuits(self):
        pi = MinPlusMatrix.from_rows([[inf, 1], [2, 3]])
        assert min_mean_cycle(pi) == Fraction(3, 2)

    def test_acyclic(self):
        assert min_mean_cycle(MinPlusMatrix.from_rows([[inf, 1], [inf, inf]])) is None

    def test_square_id_height_two(self):
        assert min_mean_cycle(trim(build(CodeKind.ID, GridKind.SQUARE, 2))) == Fraction(6, 7)


def test_digest_depends_on_shape():
    a = np.zeros((1, 4), dtype=np.int64)
    b = np.zeros((2, 2), dtype=np.int64)
    assert matrix_digest(a) != matrix_digest(b)
