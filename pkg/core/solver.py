"""Minimum codes of circular, finite and infinite strips

Circular sizes n >= 5 are read off the diagonal of Π^n for the trimmed
auxiliary graph, finite sizes n >= 4 off the (s, t) entry of Γ^(n-2) for the
source/sink graph, and infinite strips off λ = c/p. Smaller sizes go to the
oracle.
"""
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from core import aux_graph
from core.answer import Answer, format_fraction
from core.aux_graph import AugmentedGraph, AuxGraph
from core.errors import ConsistencyError, InvalidArgumentError, StabilityNotFoundError
from core.grid_topology import CodeKind, GridKind, StripSpec
from core.minplus import (
    MinPlusMatrix,
    NoCircuit,
    NormalizedPower,
    NotFoundWithinCap,
    RowOrbit,
    StabilityCert,
    StabilityOutcome,
    detect_stability,
    min_mean_cycle,
    power_at,
    row_orbit,
    set_threads,
)
from core.oracle import brute_min
from core.pattern import PatternGrid, extract_pattern, verify_pattern
from core.power_store import DiskPowerStore, MemoryPowerStore, PowerStore
from utils.config import RunConfig

logger = logging.getLogger(__name__)

CIRCULAR_TRANSFER_MIN = 5
FINITE_TRANSFER_MIN = 4

Key = Tuple[CodeKind, GridKind, int]


@dataclass(frozen=True)
class StabilityReport:
    kind: CodeKind
    grid: GridKind
    height: int
    outcome: StabilityOutcome
    raw_vertex_count: int
    trimmed_vertex_count: int
    karp_lambda: Optional[Fraction]
    karp_checked: bool

    @property
    def karp_matches(self) -> Optional[bool]:
        if not self.karp_checked:
            return None
        if isinstance(self.outcome, StabilityCert):
            return self.karp_lambda == self.outcome.lam
        if isinstance(self.outcome, NoCircuit):
            return self.karp_lambda is None
        return None

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "raw_vertices": self.raw_vertex_count,
            "trimmed_vertices": self.trimmed_vertex_count,
            "karp_lambda": None if self.karp_lambda is None else format_fraction(self.karp_lambda),
            "karp_matches": self.karp_matches,
        }
        if isinstance(self.outcome, StabilityCert):
            payload.update(self.outcome.to_dict())
            payload["outcome"] = "stable"
        elif isinstance(self.outcome, NoCircuit):
            payload.update({"outcome": "no-circuit", "empty_from": self.outcome.k})
        else:
            payload.update({"outcome": "not-found", "cap": self.outcome.cap})
        return payload


@dataclass(frozen=True)
class ClosedForm:
    """Eventually periodic minimum cardinality over all sizes.

    value(n) = small[n] for n < u, and base[r] + j*c with n = u + j*p + r
    otherwise; None stands for infeasible.
    """

    kind: CodeKind
    grid: GridKind
    height: int
    circular: bool
    u: int
    p: int
    c: int
    base: Tuple[Optional[int], ...]
    small: Dict[int, Optional[int]] = field(default_factory=dict)

    @property
    def min_size(self) -> int:
        return 3 if self.circular else 1

    @property
    def feasible(self) -> bool:
        return any(b is not None for b in self.base)

    @property
    def lam(self) -> Fraction:
        return Fraction(self.c, self.p)

    def value(self, n: int) -> Optional[int]:
        if n < self.min_size:
            raise InvalidArgumentError(f"size must be >= {self.min_size}, got {n}")
        if n < self.u:
            return self.small[n]
        j, r = divmod(n - self.u, self.p)
        b = self.base[r]
        return None if b is None else b + j * self.c

    def asymptotic(self, n: int) -> int:
        """⌈λn⌉"""
        return -((-self.c * n) // self.p)

    def exceptional_sizes(self, n_max: int, n_min: Optional[int] = None) -> List[int]:
        """Sizes in [n_min, n_max] whose value differs from ⌈λn⌉"""
        if not self.feasible:
            return []
        start = self.min_size if n_min is None else max(n_min, self.min_size)
        return [n for n in range(start, n_max + 1) if self.value(n) != self.asymptotic(n)]

    def render(self) -> str:
        shape = "circular" if self.circular else "finite"
        lines = [f"# {self.kind.value} {self.grid.value} h={self.height} {shape}"]
        if not self.feasible:
            lines.append(f"n >= {self.u}: infeasible")
        else:
            lines.append(f"lambda = {format_fraction(self.lam)}, period {self.p}, increment {self.c}, from n = {self.u}")
        for n in sorted(self.small):
            v = self.small[n]
            lines.append(f"n = {n}: {'infeasible' if v is None else v}")
        if self.feasible:
            for r, b in enumerate(self.base):
                text = "infeasible" if b is None else f"{b} + {self.c}*j"
                lines.append(f"n = {self.u + r} + {self.p}*j: {text}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "circular": self.circular,
            "u": self.u,
            "p": self.p,
            "c": self.c,
            "base": list(self.base),
            "small": {str(n): v for n, v in sorted(self.small.items())},
        }


class StripCodeSolver:
    """Answers the query shapes for one run configuration.

    Graphs, stability outcomes and row orbits are cached per (kind, grid, h).
    """

    def __init__(self, config: RunConfig, progress_callback: Optional[Callable[[str], None]] = None):
        self.config = config
        self.progress_callback = progress_callback
        set_threads(config.threads)
        self._raw: Dict[Key, AuxGraph] = {}
        self._circuit: Dict[Key, AuxGraph] = {}
        self._matrices: Dict[Key, MinPlusMatrix] = {}
        self._stores: Dict[Key, PowerStore] = {}
        self._outcomes: Dict[Key, StabilityOutcome] = {}
        self._reports: Dict[Key, StabilityReport] = {}
        self._augmented: Dict[Key, AugmentedGraph] = {}
        self._orbits: Dict[Key, RowOrbit] = {}

    # graphs

    def raw_graph(self, kind: CodeKind, grid: GridKind, h: int) -> AuxGraph:
        key = (kind, grid, h)
        if key not in self._raw:
            self._raw[key] = aux_graph.build(kind, grid, h,
                                             memory_cap_bytes=self.config.memory_cap_bytes,
                                             threads=self.config.threads,
                                             progress_callback=self.progress_callback)
        return self._raw[key]

    def circuit_graph(self, kind: CodeKind, grid: GridKind, h: int) -> AuxGraph:
        key = (kind, grid, h)
        if key not in self._circuit:
            self._circuit[key] = aux_graph.trim(self.raw_graph(kind, grid, h))
        return self._circuit[key]

    def augmented_graph(self, kind: CodeKind, grid: GridKind, h: int) -> AugmentedGraph:
        key = (kind, grid, h)
        if key not in self._augmented:
            self._augmented[key] = aux_graph.augment(aux_graph.trim_source_sink(self.raw_graph(kind, grid, h)))
        return self._augmented[key]

    def length_matrix(self, kind: CodeKind, grid: GridKind, h: int) -> MinPlusMatrix:
        key = (kind, grid, h)
        if key not in self._matrices:
            self._matrices[key] = self.circuit_graph(kind, grid, h).length_matrix(self.config.memory_cap_bytes)
        return self._matrices[key]

    def store_for(self, kind: CodeKind, grid: GridKind, h: int) -> PowerStore:
        key = (kind, grid, h)
        if key not in self._stores:
            if self.config.in_memory_store:
                self._stores[key] = MemoryPowerStore(memory_cap_bytes=self.config.memory_cap_bytes)
            else:
                directory = os.path.join(self.config.store_dir, f"{kind.value}-{grid.value}-h{h}-circuit")
                self._stores[key] = DiskPowerStore(directory, compress=self.config.compress_store)
        return self._stores[key]

    # stability

    def stability_outcome(self, kind: CodeKind, grid: GridKind, h: int) -> StabilityOutcome:
        key = (kind, grid, h)
        if key not in self._outcomes:
            g = self.circuit_graph(kind, grid, h)
            if g.is_empty:
                self._outcomes[key] = NoCircuit(k=1)
            else:
                self._outcomes[key] = detect_stability(self.length_matrix(kind, grid, h),
                                                       cap=self.config.power_cap,
                                                       store=self.store_for(kind, grid, h),
                                                       progress_callback=self.progress_callback)
        return self._outcomes[key]

    def stability(self, kind: CodeKind, grid: GridKind, h: int) -> StabilityReport:
        """Certificate plus the Karp cross-check and vertex counts"""
        key = (kind, grid, h)
        if key in self._reports:
            return self._reports[key]
        outcome = self.stability_outcome(kind, grid, h)
        g = self.circuit_graph(kind, grid, h)
        n = g.vertex_count
        checked = (n + 1) * n * 8 <= self.config.memory_cap_bytes
        karp = min_mean_cycle(g) if checked else None
        if not checked:
            logger.warning("Skipping the minimum-mean-cycle cross-check: %d vertices exceed the memory cap", n)
        report = StabilityReport(kind=kind, grid=grid, height=h, outcome=outcome,
                                 raw_vertex_count=g.raw_vertex_count,
                                 trimmed_vertex_count=n,
                                 karp_lambda=karp, karp_checked=checked)
        if report.karp_matches is False:
            raise ConsistencyError(f"minimum mean cycle {karp} disagrees with the stability certificate {outcome}")
        if checked:
            logger.info("Minimum mean cycle agrees with the stability outcome for %s %s h=%d",
                        kind.value, grid.value, h)
        self._reports[key] = report
        return report

    def _power(self, kind: CodeKind, grid: GridKind, h: int, n: int) -> Optional[NormalizedPower]:
        """Π^n, or None when it is known to be all ∞"""
        outcome = self.stability_outcome(kind, grid, h)
        store = self.store_for(kind, grid, h)
        if isinstance(outcome, StabilityCert):
            return power_at(self.length_matrix(kind, grid, h), outcome, store, n)
        if isinstance(outcome, NoCircuit):
            return None if n >= outcome.k else store.load(n)
        if n <= outcome.cap:
            return store.load(n)
        raise StabilityNotFoundError(outcome.cap)

    # queries

    def min_circular(self, kind: CodeKind, grid: GridKind, h: int, n: int) -> Answer:
        strip = StripSpec(grid, h, n, circular=True)
        if n < CIRCULAR_TRANSFER_MIN:
            return brute_min(strip, kind, cap=self.config.oracle_cap_vertices)

        power = self._power(kind, grid, h, n)
        value = None if power is None else power.min_diagonal()
        if value is None:
            return Answer.infeasible(method="transfer", exponent=n)
        diagonal = np.diagonal(power.normalized)
        vertex = int(np.argmin(diagonal))
        g = self.circuit_graph(kind, grid, h)
        return Answer(value, {
            "method": "transfer",
            "exponent": n,
            "vertex": vertex,
            "labeling": f"{int(g.vertices[vertex]):x}",
        })

    def source_row_orbit(self, kind: CodeKind, grid: GridKind, h: int) -> RowOrbit:
        key = (kind, grid, h)
        if key not in self._orbits:
            aug = self.augmented_graph(kind, grid, h)
            self._orbits[key] = row_orbit(aug.source_row(), aug, cap=self.config.power_cap)
            orbit = self._orbits[key]
            if orbit.cert is not None:
                logger.info("Source row is pseudo-periodic: c=%d p=%d u=%d",
                            orbit.cert.c, orbit.cert.p, orbit.cert.u)
        return self._orbits[key]

    def min_finite(self, kind: CodeKind, grid: GridKind, h: int, n: int) -> Answer:
        strip = StripSpec(grid, h, n)
        if n < FINITE_TRANSFER_MIN:
            return brute_min(strip, kind, cap=self.config.oracle_cap_vertices)

        aug = self.augmented_graph(kind, grid, h)
        value = self.source_row_orbit(kind, grid, h).entry(n - 2, aug.sink)
        if value is None:
            return Answer.infeasible(method="source-sink", exponent=n - 2)
        return Answer(value, {"method": "source-sink", "exponent": n - 2})

    def min_density_infinite(self, kind: CodeKind, grid: GridKind, h: int) -> Answer:
        StripSpec(grid, h)
        report = self.stability(kind, grid, h)
        outcome = report.outcome
        if isinstance(outcome, NoCircuit):
            return Answer.infeasible(method="stability", **report.to_dict())
        if isinstance(outcome, NotFoundWithinCap):
            raise StabilityNotFoundError(outcome.cap)
        density = outcome.lam / h
        logger.info("Minimum density of %s-codes in %s strips of height %d: %s",
                    kind.value, grid.value, h, format_fraction(density))
        return Answer(density, {"method": "stability", **report.to_dict()})

    def closed_form(self, kind: CodeKind, grid: GridKind, h: int, circular: bool = True,
                    n_max_explicit: Optional[int] = None) -> ClosedForm:
        StripSpec(grid, h)
        explicit_until = 0 if n_max_explicit is None else n_max_explicit + 1
        if circular:
            return self._circular_closed_form(kind, grid, h, explicit_until)
        return self._finite_closed_form(kind, grid, h, explicit_until)

    def _circular_closed_form(self, kind: CodeKind, grid: GridKind, h: int, explicit_until: int) -> ClosedForm:
        outcome = self.stability_outcome(kind, grid, h)
        if isinstance(outcome, NotFoundWithinCap):
            raise StabilityNotFoundError(outcome.cap)
        if isinstance(outcome, StabilityCert):
            u = max(outcome.u, CIRCULAR_TRANSFER_MIN, explicit_until)
            p, c = outcome.p, outcome.c
        else:
            u = max(outcome.k, CIRCULAR_TRANSFER_MIN, explicit_until)
            p, c = 1, 0
        base = tuple(self.min_circular(kind, grid, h, n).value for n in range(u, u + p))
        small = {n: self.min_circular(kind, grid, h, n).value for n in range(3, u)}
        return ClosedForm(kind=kind, grid=grid, height=h, circular=True, u=u, p=p, c=c, base=base, small=small)

    def _finite_closed_form(self, kind: CodeKind, grid: GridKind, h: int, explicit_until: int) -> ClosedForm:
        orbit = self.source_row_orbit(kind, grid, h)
        if orbit.cert is not None:
            u = max(orbit.cert.u + 2, FINITE_TRANSFER_MIN, explicit_until)
            p, c = orbit.cert.p, orbit.cert.c
        elif orbit.dead_from is not None:
            u = max(orbit.dead_from + 2, FINITE_TRANSFER_MIN, explicit_until)
            p, c = 1, 0
        else:
            raise StabilityNotFoundError(self.config.power_cap)
        base = tuple(self.min_finite(kind, grid, h, n).value for n in range(u, u + p))
        small = {n: self.min_finite(kind, grid, h, n).value for n in range(1, u)}
        return ClosedForm(kind=kind, grid=grid, height=h, circular=False, u=u, p=p, c=c, base=base, small=small)

    def pattern(self, kind: CodeKind, grid: GridKind, h: int) -> Optional[PatternGrid]:
        """A verified optimal periodic pattern, None when no code exists"""
        density = self.min_density_infinite(kind, grid, h)
        if not density.is_feasible:
            return None
        lam = density.value * h
        pattern = extract_pattern(self.circuit_graph(kind, grid, h), lam)
        if pattern.density != density.value:
            raise ConsistencyError(f"pattern density {pattern.density} differs from {density.value}")
        if not verify_pattern(pattern, kind, grid):
            raise ConsistencyError(f"extracted {kind.value} pattern for {grid.value} h={h} is not a valid code")
        return pattern


def solve(kind: CodeKind, grid: GridKind, h: int, size: Optional[int], circular: bool,
          solver: StripCodeSolver) -> Answer:
    """Dispatch on the strip shape"""
    if size is None:
        return solver.min_density_infinite(kind, grid, h)
    if circular:
        return solver.min_circular(kind, grid, h, size)
    return solver.min_finite(kind, grid, h, size)
