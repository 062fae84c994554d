"""Enumerate the operation-mode tables for every published cluster.

Prints the same-type ladders (four, six, ten, and twenty type-3 engines)
and the eight mixed clusters, with raw-versus-filtered row counts and the
full table for the small cases. These are the discrete mode sets the
smoothing layer interpolates between; the counts match the published
tables cell for cell (see tests/test_modes.py and the acceptance suite).

Run from the repository root:  python3 scripts/run_cluster_sequences.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csctraj.engines import load_catalog  # noqa: E402
from csctraj.modes import (  # noqa: E402
    default_cap,
    enumerate_mixed,
    enumerate_same_type,
    mixed_cluster,
    same_type_cluster,
)
from csctraj.power import PowerModel  # noqa: E402

SAME_TYPE_COUNTS = (4, 6, 10, 20)
MIXED_CLUSTERS = ([2, 3], [3, 5], [4, 5], [2, 4, 5], [3, 4, 5],
                  [3, 3, 3, 3], [2, 2, 3, 3], [2, 3, 4, 5])
FULL_PRINT_LIMIT = 14


def main() -> int:
    catalog = load_catalog()
    cap_w = default_cap(PowerModel(p0_bol_kw=30.0, p_bus_kw=0.5))
    print(f"feasibility cap: {cap_w:.0f} W "
          f"(30 kW array at the 0.8 AU inner bound)\n")

    for n_e in SAME_TYPE_COUNTS:
        table = enumerate_same_type(catalog, same_type_cluster(3, n_e), cap_w)
        print(f"{n_e} x engine 3: {table.n_modes} modes")
        if table.n_modes <= FULL_PRINT_LIMIT:
            for mode in table.modes:
                print(f"  {mode.index:3d}  {mode.p_used_w:8.0f} W  "
                      f"{mode.n_at_pmax} at P_max, {mode.n_at_pmin} at P_min"
                      f"  ({mode.mdot_full_mg_s:6.2f} mg/s)")
        else:
            top, bottom = table.modes[0], table.modes[-1]
            print(f"  first {top.p_used_w:8.0f} W ({top.n_at_pmax} max / "
                  f"{top.n_at_pmin} min), last {bottom.p_used_w:.0f} W "
                  f"({bottom.n_at_pmax} max / {bottom.n_at_pmin} min)")
        print()

    for ids in MIXED_CLUSTERS:
        raw = enumerate_mixed(catalog, mixed_cluster(ids), cap_w,
                              filtered=False)
        table = enumerate_mixed(catalog, mixed_cluster(ids), cap_w)
        label = "+".join(str(i) for i in ids)
        print(f"engines {{{label}}}: {raw.n_modes} raw -> "
              f"{table.n_modes} filtered")
        if table.n_modes <= FULL_PRINT_LIMIT:
            for mode in table.modes:
                settings = ", ".join(mode.settings)
                print(f"  {mode.index:3d}  {mode.p_used_w:8.0f} W  "
                      f"[{settings}]  ({mode.mdot_full_mg_s:6.2f} mg/s)")
        print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
