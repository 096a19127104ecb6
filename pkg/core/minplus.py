"""Min-plus matrix algebra over N ∪ {∞}

Entries are int64 with INF as an absorbing sentinel. Products run in a numba
kernel parallelised over output rows; the right operand is consumed in CSR
form, so multiplying by a sparse length matrix costs O(n^2 * out-degree).
"""
import hashlib
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numba
import numpy as np

from core.errors import (
    ConsistencyError,
    InvalidArgumentError,
    MatrixOverflowError,
    PowerStoreError,
    StabilityNotFoundError,
)

if TYPE_CHECKING:
    from core.power_store import PowerStore

logger = logging.getLogger(__name__)

INF = 1 << 62
DEFAULT_POWER_CAP = 1000

ProgressCallback = Optional[Callable[[str], None]]
Csr = Tuple[np.ndarray, np.ndarray, np.ndarray]


class MinPlusMatrix:
    """Square matrix over N ∪ {∞}; read-only once built"""

    __slots__ = ("entries",)

    def __init__(self, entries: np.ndarray):
        a = np.array(entries, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgumentError(f"min-plus matrices must be square, got shape {a.shape}")
        if (a < 0).any():
            raise InvalidArgumentError("min-plus entries must be non-negative")
        a[a > INF] = INF
        a.setflags(write=False)
        self.entries = a

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Union[int, float, None]]]) -> "MinPlusMatrix":
        """Build from nested lists where math.inf or None stands for ∞"""
        data = [[INF if (x is None or x == math.inf) else int(x) for x in row] for row in rows]
        return cls(np.array(data, dtype=np.int64).reshape(len(rows), len(rows)))

    @classmethod
    def identity(cls, n: int) -> "MinPlusMatrix":
        a = np.full((n, n), INF, dtype=np.int64)
        np.fill_diagonal(a, 0)
        return cls(a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def finite(self) -> np.ndarray:
        return self.entries < INF

    def to_rows(self) -> List[List[Union[int, float]]]:
        return [[math.inf if x >= INF else int(x) for x in row] for row in self.entries]

    def arcs(self) -> Tuple[int, np.ndarray, np.ndarray, np.ndarray]:
        src, dst = np.nonzero(self.finite)
        return self.n, src.astype(np.int64), dst.astype(np.int64), self.entries[src, dst]

    def __matmul__(self, other: "MinPlusMatrix") -> "MinPlusMatrix":
        return mul(self, other)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MinPlusMatrix) and np.array_equal(self.entries, other.entries)

    __hash__ = None

    def __repr__(self) -> str:
        return f"MinPlusMatrix({self.to_rows()!r})"


@numba.njit(parallel=True, cache=True)
def _mul_kernel(a, indptr, indices, data, out, overflow):
    n_rows = a.shape[0]
    inner = a.shape[1]
    n_cols = out.shape[1]
    for i in numba.prange(n_rows):
        for j in range(n_cols):
            out[i, j] = INF
        for k in range(inner):
            aik = a[i, k]
            if aik >= INF:
                continue
            for q in range(indptr[k], indptr[k + 1]):
                s = aik + data[q]
                if s >= INF:
                    overflow[i] = 1
                    continue
                j = indices[q]
                if s < out[i, j]:
                    out[i, j] = s


def set_threads(threads: int) -> None:
    """Bound the numba worker count; results do not depend on it"""
    numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))


def to_csr(entries: np.ndarray) -> Csr:
    rows, cols = np.nonzero(entries < INF)
    indptr = np.zeros(entries.shape[0] + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=entries.shape[0]), out=indptr[1:])
    return indptr, cols.astype(np.int64), np.ascontiguousarray(entries[rows, cols], dtype=np.int64)


def _product(a: np.ndarray, b: Csr, n_cols: int) -> np.ndarray:
    out = np.empty((a.shape[0], n_cols), dtype=np.int64)
    overflow = np.zeros(a.shape[0], dtype=np.int8)
    _mul_kernel(np.ascontiguousarray(a, dtype=np.int64), b[0], b[1], b[2], out, overflow)
    if overflow.any():
        raise MatrixOverflowError("a finite min-plus entry would exceed the int64 range")
    return out


def mul(a: MinPlusMatrix, b: MinPlusMatrix) -> MinPlusMatrix:
    """Exact min-plus product [AB]_ij = min_k A_ik + B_kj"""
    if a.n != b.n:
        raise InvalidArgumentError(f"dimension mismatch: {a.n} vs {b.n}")
    return MinPlusMatrix(_product(a.entries, to_csr(b.entries), b.n))


def matrix_digest(entries: np.ndarray) -> str:
    h = hashlib.blake2b(digest_size=16)
    h.update(np.asarray(entries.shape, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(entries, dtype="<i8").tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class NormalizedPower:
    """Π^k stored as (normalized, offset); offset None means Π^k is all ∞"""

    k: int
    offset: Optional[int]
    normalized: np.ndarray = field(repr=False, compare=False)
    digest: str

    @property
    def is_empty(self) -> bool:
        return self.offset is None

    def matrix(self) -> MinPlusMatrix:
        if self.offset is None:
            return MinPlusMatrix(self.normalized)
        finite = self.normalized < INF
        return MinPlusMatrix(np.where(finite, self.normalized + self.offset, INF))

    def min_diagonal(self) -> Optional[int]:
        if self.offset is None:
            return None
        diag = np.diagonal(self.normalized)
        finite = diag[diag < INF]
        return int(finite.min()) + self.offset if finite.size else None

    def shifted(self, k: int, delta: int) -> "NormalizedPower":
        offset = None if self.offset is None else self.offset + delta
        return NormalizedPower(k=k, offset=offset, normalized=self.normalized, digest=self.digest)


def normalize(raw: np.ndarray, k: int, base_offset: Optional[int] = 0) -> NormalizedPower:
    """Subtract the minimum finite entry; base_offset is added to the recorded offset"""
    finite = raw < INF
    if base_offset is None or not finite.any():
        normalized = np.full(raw.shape, INF, dtype=np.int64)
        return NormalizedPower(k=k, offset=None, normalized=normalized, digest=matrix_digest(normalized))
    low = int(raw[finite].min())
    normalized = np.where(finite, raw - low, INF).astype(np.int64)
    return NormalizedPower(k=k, offset=base_offset + low, normalized=normalized,
                           digest=matrix_digest(normalized))


@dataclass(frozen=True)
class StabilityCert:
    """Π^{i+p} = Π^i + c for every i >= u"""

    c: int
    p: int
    u: int

    @property
    def lam(self) -> Fraction:
        return Fraction(self.c, self.p)

    def to_dict(self) -> Dict[str, object]:
        return {"c": self.c, "p": self.p, "u": self.u, "lambda": f"{self.lam.numerator}/{self.lam.denominator}"}


@dataclass(frozen=True)
class NoCircuit:
    """The graph has no circuit; λ = ∞"""

    k: int


@dataclass(frozen=True)
class NotFoundWithinCap:
    cap: int


StabilityOutcome = Union[StabilityCert, NoCircuit, NotFoundWithinCap]


def power_sequence(pi: MinPlusMatrix, cap: int,
                   store: Optional["PowerStore"] = None,
                   progress_callback: ProgressCallback = None,
                   start: Optional[NormalizedPower] = None) -> Iterator[NormalizedPower]:
    """Yield normalized Π^k for k = 1..cap, persisting each one to the store.

    Only Π (in CSR form), the previous power and the current one are held.
    Products are taken on normalized matrices so entries stay small; offsets
    are accumulated as Python integers.
    """
    if cap < 1:
        raise InvalidArgumentError(f"cap must be >= 1, got {cap}")
    csr = to_csr(pi.entries)
    current = start if start is not None else normalize(pi.entries, 1)
    while True:
        if store is not None:
            store.save(current)
        if progress_callback and current.k % 10 == 0:
            progress_callback(f"computed power {current.k}")
        yield current
        if current.k >= cap:
            return
        raw = _product(current.normalized, csr, pi.n)
        current = normalize(raw, current.k + 1, base_offset=current.offset)


def detect_stability(pi: MinPlusMatrix, cap: int = DEFAULT_POWER_CAP,
                     store: Optional["PowerStore"] = None,
                     progress_callback: ProgressCallback = None,
                     verify: bool = True) -> StabilityOutcome:
    """Find the first k < k' <= cap with equal normalized powers.

    Digests are only a filter: a certificate is issued after an entrywise
    comparison with the stored matrix, then re-verified over one more period.
    """
    if cap < 2:
        raise InvalidArgumentError(f"cap must be >= 2, got {cap}")
    if store is None:
        from core.power_store import MemoryPowerStore
        store = MemoryPowerStore()

    with store.exclusive():
        return _detect_stability(pi, cap, store, progress_callback, verify)


def _detect_stability(pi: MinPlusMatrix, cap: int, store: "PowerStore",
                      progress_callback: ProgressCallback, verify: bool) -> StabilityOutcome:
    start = None
    if store.bind(matrix_digest(pi.entries), pi.n):
        cached = store.load_certificate()
        if cached is not None:
            logger.info("Reusing stored certificate c=%d p=%d u=%d", cached.c, cached.p, cached.u)
            return cached
        resume = store.max_exponent()
        if resume:
            start = store.load(resume)
            logger.info("Resuming power sequence at exponent %d", resume)

    if not pi.finite.any():
        return NoCircuit(k=1)

    for power in power_sequence(pi, cap, store, progress_callback, start=start):
        if power.offset is None:
            return NoCircuit(k=power.k)
        for k in sorted(store.exponents_for(power.digest)):
            if k >= power.k:
                continue
            earlier = store.load(k)
            if earlier.offset is not None and np.array_equal(earlier.normalized, power.normalized):
                cert = StabilityCert(c=power.offset - earlier.offset, p=power.k - k, u=k)
                logger.info("Pseudo-period found: c=%d p=%d u=%d", cert.c, cert.p, cert.u)
                if verify:
                    verify_stability(pi, cert, store, power, progress_callback)
                store.save_certificate(cert)
                return cert
    return NotFoundWithinCap(cap=cap)


def verify_stability(pi: MinPlusMatrix, cert: StabilityCert, store: "PowerStore",
                     top: NormalizedPower, progress_callback: ProgressCallback = None) -> None:
    """Check Π^{u+p+i} = Π^{u+i} + c for i < p by explicit multiplication"""
    if top.k != cert.u + cert.p:
        raise ConsistencyError(f"verification must start at exponent {cert.u + cert.p}, got {top.k}")
    csr = to_csr(pi.entries)
    current = top
    for i in range(cert.p):
        stored = store.load(cert.u + i)
        if (not np.array_equal(stored.normalized, current.normalized)
                or current.offset - stored.offset != cert.c):
            raise ConsistencyError(f"pseudo-period re-verification failed at i={i}")
        if i + 1 < cert.p:
            current = normalize(_product(current.normalized, csr, pi.n), current.k + 1, current.offset)
    if progress_callback:
        progress_callback(f"re-verified {cert.p} powers beyond u+p")


def power_at(pi: MinPlusMatrix, cert: StabilityCert, store: "PowerStore", k: int) -> NormalizedPower:
    """Π^k from the stored prefix and the certificate; one store read"""
    if k < 1:
        raise InvalidArgumentError(f"exponent must be >= 1, got {k}")
    if k < cert.u + cert.p:
        source_k, delta = k, 0
    else:
        j, r = divmod(k - cert.u, cert.p)
        source_k, delta = cert.u + r, j * cert.c
    try:
        base = store.load(source_k)
    except PowerStoreError as e:
        raise ConsistencyError(f"power {source_k} missing from the store: {e}") from e
    if base.normalized.shape[0] != pi.n:
        raise ConsistencyError(f"stored power has dimension {base.normalized.shape[0]}, expected {pi.n}")
    return base if delta == 0 and source_k == k else base.shifted(k, delta)


@dataclass(frozen=True)
class RowOrbit:
    """Normalized rows r_k = r_first · Π^(k - first) up to the first repetition.

    `cert` describes the pseudo-period of the rows; `dead_from` is the first
    exponent whose row is all ∞ (every later row is too).
    """

    first: int
    offsets: Tuple[Optional[int], ...]
    rows: Tuple[np.ndarray, ...] = field(repr=False)
    cert: Optional[StabilityCert]
    dead_from: Optional[int]

    def at(self, k: int) -> Tuple[Optional[int], np.ndarray]:
        if k < self.first:
            raise InvalidArgumentError(f"exponent {k} precedes the orbit start {self.first}")
        index = k - self.first
        if index < len(self.rows):
            return self.offsets[index], self.rows[index]
        if self.dead_from is not None:
            return None, self.rows[-1]
        if self.cert is None:
            raise StabilityNotFoundError(self.first + len(self.rows) - 1)
        j, r = divmod(k - self.cert.u, self.cert.p)
        offset, row = self.at(self.cert.u + r)
        return (None if offset is None else offset + j * self.cert.c), row

    def entry(self, k: int, column: int) -> Optional[int]:
        offset, row = self.at(k)
        if offset is None or row[column] >= INF:
            return None
        return int(row[column]) + offset


def _normalize_row(raw: np.ndarray) -> Tuple[Optional[int], np.ndarray]:
    finite = raw < INF
    if not finite.any():
        return None, np.full(raw.shape, INF, dtype=np.int64)
    low = int(raw[finite].min())
    return low, np.where(finite, raw - low, INF).astype(np.int64)


def row_orbit(row: np.ndarray, graph, cap: int = DEFAULT_POWER_CAP, first: int = 1) -> RowOrbit:
    """Iterate r ← r·Π from `row` (exponent `first`) until the normalized row repeats.

    `graph` is a MinPlusMatrix or anything else exposing arcs(); only one row
    is held at a time, so Π is never materialised densely.
    """
    n, src, dst, w = graph.arcs()
    seen: Dict[str, List[int]] = {}
    offsets: List[Optional[int]] = []
    rows: List[np.ndarray] = []

    base, current = _normalize_row(np.asarray(row, dtype=np.int64))
    for index in range(cap):
        k = first + index
        if base is None:
            offsets.append(None)
            rows.append(current)
            return RowOrbit(first, tuple(offsets), tuple(rows), cert=None, dead_from=k)
        key = matrix_digest(current.reshape(1, -1))
        for j in seen.get(key, []):
            if np.array_equal(rows[j], current):
                cert = StabilityCert(c=base - offsets[j], p=index - j, u=first + j)
                return RowOrbit(first, tuple(offsets), tuple(rows), cert=cert, dead_from=None)
        seen.setdefault(key, []).append(index)
        offsets.append(base)
        rows.append(current)

        live = current[src] < INF
        raw = np.full(n, INF, dtype=np.int64)
        np.minimum.at(raw, dst[live], current[src[live]] + w[live])
        low, current = _normalize_row(raw)
        base = None if low is None else base + low
    return RowOrbit(first, tuple(offsets), tuple(rows), cert=None, dead_from=None)


def min_mean_cycle(graph) -> Optional[Fraction]:
    """Minimum cycle mean by Karp's recurrence; None when the graph is acyclic.

    `graph` is anything with an arcs() -> (n, src, dst, length) method.
    D[k][v] is the minimum length of a k-arc walk ending at v (starting
    anywhere). Candidate ratios have denominators <= n, so ordering them in
    float64 is exact; the returned value is built from the integer pair.
    """
    n, src, dst, w = graph.arcs()
    if n == 0 or len(src) == 0:
        return None
    walks = np.full((n + 1, n), INF, dtype=np.int64)
    walks[0] = 0
    for k in range(1, n + 1):
        prev = walks[k - 1]
        live = prev[src] < INF
        if not live.any():
            return None
        np.minimum.at(walks[k], dst[live], prev[src[live]] + w[live])

    last = walks[n]
    candidates = np.nonzero(last < INF)[0]
    if candidates.size == 0:
        return None
    head = walks[:n, candidates]
    valid = head < INF
    num = np.where(valid, last[candidates][None, :] - head, 0)
    den = (n - np.arange(n, dtype=np.int64))[:, None]
    ratio = np.where(valid, num / den, -np.inf)
    kstar = ratio.argmax(axis=0)
    worst = ratio[kstar, np.arange(candidates.size)]
    best = int(worst.argmin())
    return Fraction(int(num[kstar[best], best]), int(den[kstar[best], 0]))
