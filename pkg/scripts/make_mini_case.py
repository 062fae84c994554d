"""Generate configs/mini.json: a small, fast-converging rendezvous problem.

The target state is manufactured by forward-simulating a feasible control
profile (single engine, tangential thrust arcs separated by coasts) from a
circular 1 AU orbit for 300 days. Whatever the optimizer later finds, a
solution is guaranteed to exist. The power budget keeps the available power
well above the engine's full-power draw over the whole radius range the
trajectory can reach, so the engaged operation mode never changes; switching
structure comes only from the throttle, which keeps this problem a clean
testbed for conservation checks.

Run from the repository root:  python3 scripts/make_mini_case.py
The output is committed; regenerating must be byte-identical.
"""

import json
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csctraj.dynamics import (  # noqa: E402
    AU_KM,
    CanonicalUnits,
    rv_from_mee,
    mee_from_rv,
)
from csctraj.engines import (  # noqa: E402
    exhaust_velocity_at_power,
    load_catalog,
    thrust_at_power,
)
import csctraj.dynamics as dyn  # noqa: E402

M0_KG = 600.0
TOF_DAYS = 300.0
P0_KW = 10.0
P_BUS_KW = 0.5
ENGINE_ID = 3
# thrust windows in days: on, coast, on, coast to the end
ARCS_ON = [(0.0, 40.0), (250.0, 280.0)]


def main() -> None:
    catalog = load_catalog()
    engine = catalog[ENGINE_ID]
    units = CanonicalUnits(mass_ref_kg=M0_KG)

    thrust_can = units.thrust_to_canonical(thrust_at_power(engine, engine.p_max_kw))
    c_can = units.c_to_canonical(exhaust_velocity_at_power(engine, engine.p_max_kw))
    arcs = [(units.days_to_canonical(a), units.days_to_canonical(b))
            for a, b in ARCS_ON]
    tof = units.days_to_canonical(TOF_DAYS)

    x0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])

    def rhs(t, y):
        x, m = y[:6], y[6]
        a_vec = dyn.two_body_term(x)
        on = any(a <= t < b for a, b in arcs)
        if not on:
            return np.concatenate([a_vec, [0.0]])
        b_mat = dyn.control_influence(x)
        accel = np.array([0.0, thrust_can / m, 0.0])
        return np.concatenate([a_vec + b_mat @ accel, [-thrust_can / c_can]])

    switch_times = sorted({t for arc in arcs for t in arc if 0.0 < t < tof})
    y = np.concatenate([x0, [1.0]])
    t_lo = 0.0
    for t_hi in switch_times + [tof]:
        sol = solve_ivp(rhs, (t_lo, t_hi), y, method="DOP853",
                        rtol=1e-13, atol=1e-13)
        if not sol.success:
            raise RuntimeError(sol.message)
        y = sol.y[:, -1]
        t_lo = t_hi

    xf, mf = y[:6], y[6]
    r_can, v_can = rv_from_mee(xf, 1.0)
    r0_can, v0_can = rv_from_mee(x0, 1.0)

    # sanity: round-trip and power margin
    assert np.allclose(mee_from_rv(r_can, v_can, 1.0)[:5], xf[:5], atol=1e-12)
    r_max = float(np.linalg.norm(r_can))
    p_ava_min = (P0_KW / r_max ** 2 - P_BUS_KW) * 1000.0
    p_full_w = engine.p_max_kw * 1000.0
    assert p_ava_min > p_full_w + 500.0, (p_ava_min, p_full_w)

    def fmt_vec(vec):
        return [float(f"{v:.17g}") for v in vec]

    doc = {
        "name": "mini-1au-spiral",
        "spacecraft": {"m0_kg": M0_KG},
        "power": {
            "p0_bol_kw": P0_KW,
            "p_bus_kw": P_BUS_KW,
            "decay_rate_per_year": 0.0,
            "phi_coeffs": None,
            "r_min_au": 0.8,
            "r_max_au": 2.0,
        },
        "cluster": {"kind": "same_type", "engine_ids": [ENGINE_ID]},
        "boundary": {
            "epoch": "2024-06-17",
            "r0_km": fmt_vec(r0_can * AU_KM),
            "v0_km_s": fmt_vec(v0_can * units.vu_km_s),
            "rf_km": fmt_vec(r_can * AU_KM),
            "vf_km_s": fmt_vec(v_can * units.vu_km_s),
            "tof_days": TOF_DAYS,
            "n_rev": 0,
        },
        "solver": {
            "rho_final": 1e-2,
            "schedule_steps": 6,
            "max_trials": 16,
        },
    }

    out = Path(__file__).resolve().parent.parent / "configs" / "mini.json"
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"forward-simulated feasible profile: m_f = {mf * M0_KG:.3f} kg, "
          f"r_f = {r_max:.4f} AU, min P_ava = {p_ava_min:.0f} W")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
