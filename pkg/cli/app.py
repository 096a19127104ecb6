"""Command-line front end for the strip code solver"""
import argparse
import csv
import io
import json
import logging
import sys
import time
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple

from core import aux_graph
from core.answer import Answer, format_fraction
from core.errors import ConfigError, InvalidArgumentError, StabilityNotFoundError, StripCodeError
from core.grid_topology import CodeKind, GridKind, StripSpec
from core.solver import StripCodeSolver, solve
from utils.config import ConfigManager, RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_NOT_FOUND = 3
EXIT_USAGE = 64

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

INAPPLICABLE = "X"
INFEASIBLE = "∅"
TABLE_GRIDS = (GridKind.SQUARE, GridKind.KING, GridKind.TRIANGULAR, GridKind.TOROIDAL)
DEFAULT_TABLE_CODES = "id,ld,ltd"


class UsageError(Exception):
    """Bad flags or flag combinations"""


class StripCodesArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


Record = Dict[str, Any]


def parse_sizes(text: str) -> List[int]:
    """`12` or an inclusive range `5..40`"""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            sizes = list(range(int(lo), int(hi) + 1))
        else:
            sizes = [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid size {text!r}; expected N or A..B")
    if not sizes:
        raise argparse.ArgumentTypeError(f"empty size range {text!r}")
    return sizes


def parse_codes(text: str) -> List[CodeKind]:
    try:
        return [CodeKind(part.strip().lower()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid code list {text!r}")


def _add_query_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--code", required=True, type=CodeKind, choices=list(CodeKind),
                        metavar="{d,td,ld,ltd,id}", help="kind of code")
    parser.add_argument("--grid", required=True, type=GridKind, choices=list(GridKind),
                        metavar="{square,triangular,king,toroidal}", help="grid topology")
    parser.add_argument("--height", required=True, type=int, help="strip height")


def build_parser() -> StripCodesArgumentParser:
    common = StripCodesArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON result record")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    common.add_argument("--progress", action="store_true", help="report progress on stderr")
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    common.add_argument("--power-cap", type=int, default=None, help="largest matrix exponent to try")
    common.add_argument("--memory-cap", type=int, default=None, help="memory cap in bytes")
    common.add_argument("--oracle-cap", type=int, default=None, help="largest strip for brute force")
    common.add_argument("--store-dir", default=None, help="power store directory")
    common.add_argument("--in-memory-store", action="store_true", default=None,
                        help="keep matrix powers in memory only")

    parser = StripCodesArgumentParser(prog="strip-codes",
                                      description="Minimum identifying, locating and dominating codes in grid strips")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=StripCodesArgumentParser)

    p = sub.add_parser("solve", parents=[common], help="minimum code of a finite or circular strip")
    _add_query_flags(p)
    p.add_argument("--size", required=True, type=parse_sizes, help="strip size N or range A..B")
    shape = p.add_mutually_exclusive_group()
    shape.add_argument("--circular", action="store_true", help="columns wrap around")
    shape.add_argument("--finite", action="store_true", help="plain strip (default)")

    p = sub.add_parser("density", parents=[common], help="minimum density in the infinite strip")
    _add_query_flags(p)

    p = sub.add_parser("pattern", parents=[common], help="optimal periodic pattern of the infinite strip")
    _add_query_flags(p)

    p = sub.add_parser("stability", parents=[common], help="pseudo-period of the length matrix")
    _add_query_flags(p)

    p = sub.add_parser("closed-form", parents=[common], help="minimum over all sizes as a periodic recurrence")
    _add_query_flags(p)
    p.add_argument("--finite", action="store_true", help="plain strips instead of circular ones")
    p.add_argument("--explicit-until", type=int, default=None, help="list sizes up to N explicitly")
    p.add_argument("--exceptions-until", type=int, default=60, help="search exceptional sizes up to N")

    p = sub.add_parser("table", parents=[common], help="density table over grids, codes and heights")
    p.add_argument("--max-height", type=int, default=3, help="largest height (default 3)")
    p.add_argument("--codes", type=parse_codes, default=parse_codes(DEFAULT_TABLE_CODES),
                   help=f"comma-separated codes (default {DEFAULT_TABLE_CODES})")

    p = sub.add_parser("export-graph", parents=[common], help="write the auxiliary graph as text")
    _add_query_flags(p)
    p.add_argument("--output", "-o", required=True, help="destination file")
    p.add_argument("--untrimmed", action="store_true", help="export all labelings before trimming")

    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format=LOG_FORMAT, stream=sys.stderr)


def make_config(args: argparse.Namespace, manager: Optional[ConfigManager] = None) -> RunConfig:
    manager = manager or ConfigManager()
    return manager.run_config(
        threads=args.threads,
        power_cap=args.power_cap,
        memory_cap_bytes=args.memory_cap,
        oracle_cap_vertices=args.oracle_cap,
        store_dir=args.store_dir,
        in_memory_store=args.in_memory_store,
    )


def _query(kind: CodeKind, grid: GridKind, h: int, size: Optional[int], circular: bool) -> Record:
    return {
        "kind": kind.value,
        "grid": grid.value,
        "h": h,
        "n": "inf" if size is None else size,
        "circular": circular,
    }


def _answer_value(answer: Answer) -> Any:
    if answer.value is None:
        return "infeasible"
    if isinstance(answer.value, Fraction):
        return format_fraction(answer.value)
    return answer.value


def _finite_stability(solver: StripCodeSolver, kind: CodeKind, grid: GridKind, h: int) -> Record:
    """Source-row orbit certificate with the source/sink graph's vertex counts"""
    orbit = solver.source_row_orbit(kind, grid, h)
    block: Record = orbit.cert.to_dict() if orbit.cert else {"dead_from": orbit.dead_from}
    base = solver.augmented_graph(kind, grid, h).base
    block["raw_vertices"] = base.raw_vertex_count
    block["trimmed_vertices"] = base.vertex_count
    return block


def cmd_solve(args: argparse.Namespace, solver: StripCodeSolver) -> Tuple[List[Record], int]:
    records = []
    for n in args.size:
        start = time.perf_counter()
        answer = solve(args.code, args.grid, args.height, n, args.circular, solver)
        record: Record = {
            "query": _query(args.code, args.grid, args.height, n, args.circular),
            "answer": _answer_value(answer),
            "certificate": answer.certificate,
            "timings": {"seconds": round(time.perf_counter() - start, 6)},
        }
        if answer.certificate.get("method") == "transfer":
            record["stability"] = solver.stability(args.code, args.grid, args.height).to_dict()
        elif answer.certificate.get("method") == "source-sink":
            record["stability"] = _finite_stability(solver, args.code, args.grid, args.height)
        records.append(record)
    feasible = any(r["answer"] != "infeasible" for r in records)
    return records, EXIT_OK if feasible else EXIT_INFEASIBLE


def cmd_density(args: argparse.Namespace, solver: StripCodeSolver) -> Tuple[List[Record], int]:
    start = time.perf_counter()
    answer = solver.min_density_infinite(args.code, args.grid, args.height)
    record: Record = {
        "query": _query(args.code, args.grid, args.height, None, False),
        "answer": _answer_value(answer),
        "stability": solver.stability(args.code, args.grid, args.height).to_dict(),
        "timings": {"seconds": round(time.perf_counter() - start, 6)},
    }
    return [record], EXIT_OK if answer.is_feasible else EXIT_INFEASIBLE


def cmd_pattern(args: argparse.Namespace, solver: StripCodeSolver) -> Tuple[List[Record], int]:
    start = time.perf_counter()
    pattern = solver.pattern(args.code, args.grid, args.height)
    record: Record = {
        "query": _query(args.code, args.grid, args.height, None, False),
        "stability": solver.stability(args.code, args.grid, args.height).to_dict(),
        "timings": {"seconds": round(time.perf_counter() - start, 6)},
    }
    if pattern is None:
        record["answer"] = "infeasible"
        return [record], EXIT_INFEASIBLE
    record["answer"] = format_fraction(pattern.density)
    record["pattern"] = pattern.render(args.code, args.grid)
    record["period"] = pattern.period
    return [record], EXIT_OK


def cmd_stability(args: argparse.Namespace, solver: StripCodeSolver) -> Tuple[List[Record], int]:
    start = time.perf_counter()
    report = solver.stability(args.code, args.grid, args.height)
    record: Record = {
        "query": _query(args.code, args.grid, args.height, None, False),
        "stability": report.to_dict(),
        "timings": {"seconds": round(time.perf_counter() - start, 6)},
    }
    outcome = record["stability"]["outcome"]
    if outcome == "not-found":
        raise StabilityNotFoundError(report.outcome.cap)
    record["answer"] = record["stability"].get("lambda", "infeasible")
    return [record], EXIT_OK if outcome == "stable" else EXIT_INFEASIBLE


def cmd_closed_form(args: argparse.Namespace, solver: StripCodeSolver) -> Tuple[List[Record], int]:
    start = time.perf_counter()
    form = solver.closed_form(args.code, args.grid, args.height, circular=not args.finite,
                              n_max_explicit=args.explicit_until)
    first_transfer = 5 if form.circular else 4
    record: Record = {
        "query": _query(args.code, args.grid, args.height, None, form.circular),
        "answer": form.to_dict(),
        "lambda": format_fraction(form.lam) if form.feasible else "infeasible",
        "exceptional_sizes": form.exceptional_sizes(args.exceptions_until, n_min=first_transfer),
        "rendered": form.render(),
        "timings": {"seconds": round(time.perf_counter() - start, 6)},
    }
    if form.circular:
        record["stability"] = solver.stability(args.code, args.grid, args.height).to_dict()
    else:
        record["stability"] = _finite_stability(solver, args.code, args.grid, args.height)
    return [record], EXIT_OK if form.feasible else EXIT_INFEASIBLE


def table_cell(solver: StripCodeSolver, kind: CodeKind, grid: GridKind, h: int) -> str:
    if h < grid.min_height or (h == 1 and grid is not GridKind.SQUARE):
        return INAPPLICABLE
    answer = solver.min_density_infinite(kind, grid, h)
    return format_fraction(answer.value) if answer.is_feasible else INFEASIBLE


def cmd_table(args: argparse.Namespace, solver: StripCodeSolver) -> Tuple[List[Record], int]:
    if args.max_height < 1:
        raise InvalidArgumentError(f"--max-height must be positive, got {args.max_height}")
    records = []
    for h in range(1, args.max_height + 1):
        for grid in TABLE_GRIDS:
            for kind in args.codes:
                records.append({"grid": grid.value, "h": h, "code": kind.value,
                                "density": table_cell(solver, kind, grid, h)})
    return records, EXIT_OK


def cmd_export_graph(args: argparse.Namespace, solver: StripCodeSolver) -> Tuple[List[Record], int]:
    g = (solver.raw_graph if args.untrimmed else solver.circuit_graph)(args.code, args.grid, args.height)
    aux_graph.export_graph(g, args.output)
    record: Record = {
        "query": _query(args.code, args.grid, args.height, None, False),
        "output": args.output,
        "vertices": g.vertex_count,
        "arcs": g.arc_count,
    }
    return [record], EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, StripCodeSolver], Tuple[List[Record], int]]] = {
    "solve": cmd_solve,
    "density": cmd_density,
    "pattern": cmd_pattern,
    "stability": cmd_stability,
    "closed-form": cmd_closed_form,
    "table": cmd_table,
    "export-graph": cmd_export_graph,
}


def render_human(command: str, records: List[Record]) -> str:
    out = io.StringIO()
    if command == "table":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["grid", "h", "code", "density"])
        for r in records:
            writer.writerow([r["grid"], r["h"], r["code"], r["density"]])
        return out.getvalue()
    for r in records:
        if command == "pattern" and "pattern" in r:
            out.write(r["pattern"])
        elif command == "closed-form":
            out.write(r["rendered"])
            out.write(f"exceptional sizes: {r['exceptional_sizes']}\n")
        elif command == "stability":
            s = r["stability"]
            out.write(" ".join(f"{k}={s[k]}" for k in sorted(s)) + "\n")
        elif command == "export-graph":
            out.write(f"wrote {r['vertices']} vertices and {r['arcs']} arcs to {r['output']}\n")
        else:
            q = r["query"]
            size = "" if q["n"] == "inf" else f" n={q['n']}"
            out.write(f"{q['kind']} {q['grid']} h={q['h']}{size}: {r['answer']}\n")
    return out.getvalue()


def _validate(args: argparse.Namespace) -> None:
    if hasattr(args, "grid"):
        StripSpec(args.grid, args.height)
    if args.command == "solve":
        for n in args.size:
            StripSpec(args.grid, args.height, n, circular=args.circular)


def main(argv: Optional[Sequence[str]] = None,
         stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        config = make_config(args)
    except (UsageError, InvalidArgumentError, ConfigError) as e:
        print(f"usage error: {e}", file=stderr)
        return EXIT_USAGE

    configure_logging(args.verbose)
    progress = (lambda message: print(message, file=stderr)) if args.progress else None

    try:
        solver = StripCodeSolver(config, progress_callback=progress)
        records, code = COMMANDS[args.command](args, solver)
    except InvalidArgumentError as e:
        print(f"usage error: {e}", file=stderr)
        return EXIT_USAGE
    except StabilityNotFoundError as e:
        print(f"error: {e}", file=stderr)
        return EXIT_NOT_FOUND
    except StripCodeError as e:
        logger.debug("Query failed", exc_info=True)
        print(f"error: {e}", file=stderr)
        return EXIT_ERROR

    if args.json:
        payload: Any = records if len(records) != 1 or args.command == "table" else records[0]
        stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    else:
        stdout.write(render_human(args.command, records))
    return code
