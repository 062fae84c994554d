"""Continue the converged Earth -> comet extremal to sharper smoothing levels
and measure the Hamiltonian drift at each one.

This reproduces the evidence behind the known-red Hamiltonian gate in
tests/test_acceptance.py: the smoothed feedback flow is not canonical (the
state half follows the physical activation-weighted thrust, the costate
half follows the full smoothed-Hamiltonian gradient), so the Hamiltonian
drifts inside switching layers. Along this extremal the measured drift is
close to 0.045 * rho — linear, not quadratic, because one of the nine
switching-surface crossings is near-grazing — and single shooting stops
converging below rho ~ 3.65e-4 (square-root-midpoint insertions stall with
root-finder residuals pinned near 3e-9, two orders above the 1e-9 gate).
The script prints the drift table and the sharpest converged costates; the
acceptance suite embeds those as a warm start and re-verifies convergence
live before trusting them.

Run from the repository root (a few minutes, dominated by the initial
multi-start solve; pass --eta to skip it and start from known costates):
    python3 scripts/sharpen_case1.py [--rho-floor 1e-4] [--eta v1,...,v7]
"""

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csctraj import _core  # noqa: E402
from csctraj.adjoint import SmoothingParams, pack  # noqa: E402
from csctraj.config import build_problem, load_config  # noqa: E402
from csctraj.solver import (  # noqa: E402
    SolverParams,
    continuation_solve,
    solve_fixed_rho,
)


def hamiltonian_drift(problem, eta, rho: float) -> tuple[float, float, float]:
    """Max |H - H(0)| along the arc, H(0), and the arrival mass in kg."""
    ctx = problem.ctx.with_rho(SmoothingParams(rho_b=rho, rho_c=rho))
    flat = _core.flatten_context(ctx)
    z0 = pack(np.asarray(problem.setup.x0), 1.0, eta[:6], eta[6])
    res = _core.propagate(z0, 0.0, problem.setup.tof, flat,
                          rtol=1e-12, atol=1e-12, record=True)
    if res.status != _core.STATUS_OK:
        raise RuntimeError(f"propagation status {res.status} at rho={rho}")
    h = np.array([_core.hamiltonian_flat(t, z, flat.args)
                  for t, z in zip(res.t_rec, res.z_rec)])
    mass_kg = res.z_rec[-1][6] * problem.units.mass_ref_kg
    return float(np.max(np.abs(h - h[0]))), float(h[0]), float(mass_kg)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rho-floor", type=float, default=1e-4)
    parser.add_argument("--steps", type=int, default=9,
                        help="geometric ladder points from 1e-2 to the floor")
    parser.add_argument("--eta", default=None,
                        help="comma-separated costates converged at rho=1e-2 "
                             "(skips the multi-start solve)")
    args = parser.parse_args()

    repo = Path(__file__).resolve().parent.parent
    problem = build_problem(load_config(repo / "configs" / "case1.json"))
    params = SolverParams()

    if args.eta is not None:
        eta = np.array([float(v) for v in args.eta.split(",")])
        if eta.shape != (7,):
            parser.error("--eta needs 7 comma-separated values")
    else:
        print("solving from scratch (several minutes) ...", flush=True)
        result = continuation_solve(problem.setup, problem.config.solver,
                                    seed=args.seed)
        if not result.success:
            print(f"base solve failed: {result.message}")
            return 1
        eta = np.asarray(result.eta)
        print(f"base solve: trial {result.trial}, "
              f"m_f = {result.m_final_kg:.3f} kg")

    drift, h0, _ = hamiltonian_drift(problem, eta, 1e-2)
    print(f"\n{'rho':>12}  {'residual':>10}  {'max |dH|':>10}  "
          f"{'drift/rho':>10}  {'m_f [kg]':>10}")
    print(f"{1e-2:12.4e}  {'(base)':>10}  {drift:10.3e}  {drift / 1e-2:10.3f}"
          f"  {'':>10}")

    ladder = list(np.geomspace(1e-2, args.rho_floor, args.steps))[1:]
    cur_rho, t0 = 1e-2, time.perf_counter()
    while ladder:
        target = ladder[0]
        step = solve_fixed_rho(eta, problem.setup, target, params)
        if not step.success:
            midpoint = math.sqrt(cur_rho * target)
            if abs(midpoint / target - 1.0) < 1e-3:
                print(f"\ncontinuation barrier: cannot pass rho = "
                      f"{target:.4e} (residual {step.residual_inf:.2e})")
                break
            ladder.insert(0, midpoint)
            continue
        eta, cur_rho = np.asarray(step.eta), target
        ladder.pop(0)
        drift, h0, mass = hamiltonian_drift(problem, eta, cur_rho)
        print(f"{cur_rho:12.4e}  {step.residual_inf:10.2e}  {drift:10.3e}  "
              f"{drift / cur_rho:10.3f}  {mass:10.3f}")

    print(f"\nsharpest converged level: rho = {cur_rho:.16e} "
          f"({time.perf_counter() - t0:.0f} s of continuation)")
    print("costates there:")
    for v in eta:
        print(f"  {float(v)!r}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
