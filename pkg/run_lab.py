"""Launcher that runs the laboratory from a source checkout without installing it"""

import sys
from pathlib import Path

SRC = Path(__file__).resolve().parent / "src"

if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from spatial_lab.cli import main

if __name__ == "__main__":
    print("=" * 60)
    print("SPATIAL LAB - product systems of Hilbert bimodules")
    print("=" * 60)
    print()
    print("Usage:")
    print("  run_lab.py --experiment suite --out reports/suite.csv")
    print("  run_lab.py --config fixtures/suite.json")
    print("  run_lab.py --experiment decompose-tuple 3 1 2 2 1")
    print("  run_lab.py --view reports/suite.csv   (q quits, arrows filter)")
    print()
    print("Paths are taken relative to the current directory.")
    print("=" * 60)
    print()

    try:
        code = main()
    except KeyboardInterrupt:
        print("\nInterrupted.")
        code = 130
    sys.exit(code)
