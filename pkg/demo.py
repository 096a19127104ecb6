#!/usr/bin/env python3
"""
Demo script for strip-codes
Runs a few small queries end to end without touching the user's power store
"""
import os
import sys
import tempfile

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.answer import format_fraction
from core.grid_topology import CodeKind, GridKind
from core.solver import StripCodeSolver
from utils.config import ConfigManager


def demo_circular(solver):
    """Circular square strips of height 1 and 2"""
    print("\n=== Circular Strips ===")
    for h in (1, 2):
        values = [solver.min_circular(CodeKind.ID, GridKind.SQUARE, h, n).render() for n in range(5, 15)]
        print(f"ID, square, h={h}, n=5..14: {', '.join(values)}")

    answer = solver.min_circular(CodeKind.ID, GridKind.KING, 2, 8)
    print(f"ID, king, h=2, n=8: {answer.render()}")


def demo_densities(solver):
    """Minimum densities and their certificates"""
    print("\n=== Infinite Strips ===")
    cases = [
        (CodeKind.ID, GridKind.SQUARE, 1),
        (CodeKind.ID, GridKind.SQUARE, 2),
        (CodeKind.LD, GridKind.SQUARE, 2),
        (CodeKind.ID, GridKind.TRIANGULAR, 2),
        (CodeKind.ID, GridKind.KING, 2),
    ]
    for kind, grid, h in cases:
        answer = solver.min_density_infinite(kind, grid, h)
        report = solver.stability(kind, grid, h)
        stats = report.to_dict()
        if answer.is_feasible:
            print(f"✓ {kind.value} {grid.value} h={h}: density {answer.render()} "
                  f"(c={stats['c']}, p={stats['p']}, u={stats['u']}, "
                  f"{stats['trimmed_vertices']} of {stats['raw_vertices']} labelings kept)")
        else:
            print(f"∅ {kind.value} {grid.value} h={h}: no code exists")


def demo_pattern(solver):
    """An optimal periodic pattern"""
    print("\n=== Optimal Pattern ===")
    pattern = solver.pattern(CodeKind.ID, GridKind.SQUARE, 2)
    print(pattern.render(CodeKind.ID, GridKind.SQUARE), end="")


def demo_closed_form(solver):
    """All sizes at once"""
    print("\n=== Closed Form ===")
    form = solver.closed_form(CodeKind.LD, GridKind.SQUARE, 2)
    print(form.render(), end="")
    print(f"sizes off ⌈{format_fraction(form.lam)}·n⌉ up to 40: {form.exceptional_sizes(40, n_min=5)}")


def main():
    """Main demo function"""
    print("strip-codes demo")
    print("=" * 50)

    # Check if we're in the right directory
    if not os.path.exists('main.py'):
        print("Please run this script from the strip-codes directory")
        sys.exit(1)

    try:
        store_dir = tempfile.mkdtemp(prefix="strip_codes_demo_")
        config = ConfigManager().run_config(store_dir=store_dir, compress_store=False)
        solver = StripCodeSolver(config, progress_callback=None)

        demo_circular(solver)
        demo_densities(solver)
        demo_pattern(solver)
        demo_closed_form(solver)

        print(f"\nMatrix powers were stored under: {store_dir}")
        print("Run `python3 main.py --help` for the command-line interface.")

    except KeyboardInterrupt:
        print("\nDemo interrupted by user")
    except Exception as e:
        print(f"\n❌ Demo failed: {str(e)}")
        import traceback
        traceback.print_exc()


if __name__ == "__main__":
    main()
