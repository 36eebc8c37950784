#!/usr/bin/env python3
"""Latency benchmark: render a synthetic corpus, stream it through the
pipeline, and print per-stage timings plus the end-to-end mean against the
0.167 s/frame soft target. Intended for CI logs; the numbers are hardware
dependent.

Usage: python scripts/bench_latency.py [--scenes 99] [--seed 7] [--vmmr]
"""

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from vigil.corpus import generate_corpus  # noqa: E402
from vigil.pipeline import PipelineConfig, run  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--scenes", type=int, default=99)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--vmmr", action="store_true", help="include the sanity classifier stage")
    parser.add_argument("--threads", action="store_true")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        generate_corpus(
            tmp, scenes=args.scenes, seed=args.seed,
            noisy_fraction=0.1, occluded_fraction=0.05, include_adversarial=False,
        )
        config = PipelineConfig(
            source=tmp,
            camera_id="bench",
            threads=args.threads,
            enable_vmmr=args.vmmr,
            weights="sanity" if args.vmmr else "",
        )
        report = run(config)

    print(report.render())
    per_frame = sum(t.total for t in report.timings) / max(report.frames_processed, 1)
    verdict = "MEETS" if per_frame <= 0.167 else "MISSES"
    print(f"\nend-to-end mean: {per_frame * 1000:.1f} ms/frame ({verdict} the 0.167 s soft target)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
