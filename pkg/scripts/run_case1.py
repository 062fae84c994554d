"""Solve the flagship Earth -> comet 67P rendezvous and summarize the result.

Four type-3 engines, 3000 kg, 30 kW, 1776 days, two full revolutions. The
published arrival mass for this configuration is 1930.507 kg; the solver's
continuation (seed 0) lands within 0.003% of it. Expect a few minutes of
wall time: the multi-start loop visits ~25 random costate guesses before
one carries the smoothing schedule all the way down to rho = 1e-2.

Run from the repository root:
    python3 scripts/run_case1.py [--seed N] [--out-dir runs/case1]

Output files (solution.json, trajectory.csv, manifest.json) go through the
same writer as `csctraj solve`, so they are byte-reproducible for a fixed
seed.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csctraj.cli import main as cli_main  # noqa: E402

PUBLISHED_MASS_KG = 1930.507


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="runs/case1")
    args = parser.parse_args()

    repo = Path(__file__).resolve().parent.parent
    config = repo / "configs" / "case1.json"
    started = time.perf_counter()
    rc = cli_main(["solve", "--config", str(config), "--seed",
                   str(args.seed), "--out-dir", args.out_dir])
    elapsed = time.perf_counter() - started
    if rc != 0:
        print(f"solver exited with code {rc} after {elapsed:.0f} s")
        return rc

    import json

    doc = json.loads((Path(args.out_dir) / "solution.json").read_text())
    mass = doc["m_final_kg"]
    print(f"\nelapsed {elapsed:.0f} s; arrival mass {mass:.3f} kg "
          f"({100.0 * abs(mass - PUBLISHED_MASS_KG) / PUBLISHED_MASS_KG:.3f}% "
          f"from the published {PUBLISHED_MASS_KG} kg)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
