#!/usr/bin/env python3
"""Sweep the width multiplier and input resolution of the classifier stack
and print parameter / multiply-add counts per configuration.

Usage: python scripts/arch_sweep.py [--classes 431]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from vigil.vmmr import build_architecture, count_mult_adds, count_params  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--classes", type=int, default=431)
    args = parser.parse_args()

    rows = [("alpha", "resolution", "params", "mult-adds")]
    for alpha in (1.0, 0.75, 0.5, 0.25):
        for res in (224, 192, 160, 128):
            spec = build_architecture(alpha, res, args.classes)
            rows.append(
                (f"{alpha:.2f}", str(res), f"{count_params(spec):,}", f"{count_mult_adds(spec):,}")
            )
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for row in rows:
        print("  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
