"""Sweep the revolution count on the Earth -> comet rendezvous.

The terminal true-longitude target is only fixed up to whole revolutions;
each candidate count is a separate boundary-value problem with its own
local extremal (or none). This drives the same sweep the CLI exposes as
`csctraj solve --sweep-nrev` and reports the arrival mass per candidate;
two revolutions is the published optimum for the 1776-day window.

Expect roughly (number of candidates) x (a few minutes) of wall time.

Run from the repository root:
    python3 scripts/sweep_nrev_case1.py [--range 1..3] [--seed 0]
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csctraj.cli import main as cli_main  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--range", default="1..3",
                        help="inclusive candidate range, e.g. 1..3")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="runs/case1_nrev_sweep")
    args = parser.parse_args()

    repo = Path(__file__).resolve().parent.parent
    config = repo / "configs" / "case1.json"
    rc = cli_main(["solve", "--config", str(config), "--seed",
                   str(args.seed), "--sweep-nrev", args.range,
                   "--out-dir", args.out_dir])
    if rc != 0:
        print(f"sweep exited with code {rc}")
        return rc

    doc = json.loads((Path(args.out_dir) / "solution.json").read_text())
    print("\nn_rev   converged   m_final [kg]")
    for item in doc["sweep"]["items"]:
        mass = item["m_final_kg"]
        mass_text = f"{mass:.3f}" if item["success"] else "-"
        print(f"{item['n_rev']:5d}   {str(item['success']):>9}   {mass_text}")
    print(f"\nbest: n_rev = {doc['sweep']['best_n_rev']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
