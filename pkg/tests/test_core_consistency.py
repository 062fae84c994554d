"""The compiled inner loop must be numerically identical to the reference path.

_core repeats the adjoint/dynamics formulas in a flat, numba-friendly form.
These tests pin the two implementations together pointwise (right-hand side,
Hamiltonian, planet positions) and check the hand-rolled Dormand-Prince 5(4)
against scipy's DOP853 on the same compiled right-hand side. Status codes and
the record path are exercised directly, and one subprocess run covers the
no-numba fallback decorator.
"""

import math
import subprocess
import sys
import textwrap

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from csctraj import _core
from csctraj.adjoint import (
    _planet_positions_au,
    full_rhs,
    hamiltonian,
    make_context,
    pack,
)
from csctraj.control import SmoothingParams
from csctraj.dynamics import MU_SUN_KM3_S2, CanonicalUnits, load_ephemeris
from csctraj.power import PowerModel

PHI_QUARTIC = (1.1063, 0.1495, -0.299, -0.0432, 0.0)
BODIES = ("venus", "earth", "mars", "jupiter")


@pytest.fixture(scope="module")
def ctx_plain(table_four):
    return make_context(table_four, CanonicalUnits(mass_ref_kg=3000.0),
                        PowerModel(p0_bol_kw=30.0, p_bus_kw=0.5),
                        SmoothingParams(rho_b=1e-2, rho_c=1e-2))


@pytest.fixture(scope="module")
def ctx_rich(table_four):
    power = PowerModel(p0_bol_kw=30.0, p_bus_kw=0.5,
                       decay_rate_per_year=0.02, phi_coeffs=PHI_QUARTIC)
    return make_context(table_four, CanonicalUnits(mass_ref_kg=3000.0),
                        power, SmoothingParams(rho_b=1e-2, rho_c=1e-2),
                        epoch0_jd=2460478.5, ephemeris=load_ephemeris(),
                        bodies=BODIES)


def _random_states(n, seed=11):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = rng.uniform(0.7, 2.2)
        f, g = rng.uniform(-0.3, 0.3, size=2)
        if math.hypot(f, g) > 0.55:
            continue
        h, k = rng.uniform(-0.2, 0.2, size=2)
        l = rng.uniform(0.0, 4.0 * math.pi)
        m = rng.uniform(0.55, 1.0)
        lam = rng.normal(size=6)
        lam_m = rng.uniform(-1.2, 0.3)
        t = rng.uniform(0.0, 30.0)
        out.append((pack(np.array([p, f, g, h, k, l]), m, lam, lam_m), t))
    return out


_Z0 = pack(np.array([1.2, 0.05, -0.03, 0.02, -0.01, 0.7]), 1.0,
           np.array([0.2, -0.4, 0.3, 0.1, -0.2, 0.5]), -0.5)


# --- flattening ----------------------------------------------------------------------

def test_flatten_layout_plain(ctx_plain, table_four):
    flat = _core.flatten_context(ctx_plain)
    p_used, gamma, t_end, c_end, pw = flat.args[:5]
    assert np.array_equal(p_used, ctx_plain.p_used_w)
    assert np.array_equal(gamma, ctx_plain.gamma_matrix)
    assert np.array_equal(t_end, ctx_plain.t_end)
    assert np.array_equal(c_end, ctx_plain.c_end)
    assert pw[0] == 30.0 and pw[2] == 0.5
    assert pw[4] == 0.0  # inverse-square flag: no rational fit
    assert flat.args[5] == 1e-2 and flat.args[6] == 1e-2
    assert flat.args[7].shape == (0,)
    assert flat.n_channels == len(table_four.channels)


def test_flatten_layout_rich(ctx_rich):
    flat = _core.flatten_context(ctx_rich)
    pw = flat.args[4]
    assert pw[1] == 0.02
    assert pw[4] == 1.0
    assert tuple(pw[5:10]) == PHI_QUARTIC
    mu_b, elems = flat.args[7], flat.args[8]
    assert mu_b.shape == (4,)
    earth = ctx_rich.ephemeris["earth"]
    assert mu_b[1] == pytest.approx(earth.mu_km3_s2 / MU_SUN_KM3_S2,
                                    rel=1e-15)
    assert elems[1, 4] == pytest.approx(math.radians(earth.i_deg), rel=1e-15)
    assert flat.args[9] == 2460478.5
    assert flat.args[10] == ctx_rich.units.tu_s


# --- pointwise agreement with the reference implementations -------------------------

@pytest.mark.parametrize("which", ["plain", "rich"])
def test_rhs_matches_reference(which, ctx_plain, ctx_rich):
    ctx = ctx_plain if which == "plain" else ctx_rich
    flat = _core.flatten_context(ctx)
    for z, t in _random_states(40):
        fast = _core.rhs(t, z, flat)
        slow = full_rhs(z, t, ctx)
        assert np.allclose(fast, slow, rtol=1e-11, atol=1e-13), (z, t)


@pytest.mark.parametrize("which", ["plain", "rich"])
def test_hamiltonian_matches_reference(which, ctx_plain, ctx_rich):
    ctx = ctx_plain if which == "plain" else ctx_rich
    flat = _core.flatten_context(ctx)
    for z, t in _random_states(40, seed=7):
        fast = _core.hamiltonian(t, z, flat)
        slow = hamiltonian(z, t, ctx)
        assert fast == pytest.approx(slow, rel=1e-12, abs=1e-14)


def test_planet_positions_match_reference(ctx_rich):
    flat = _core.flatten_context(ctx_rich)
    elems, epoch0_jd, tu_s = flat.args[8], flat.args[9], flat.args[10]
    for t in (0.0, 3.7, 12.9, 55.0):
        out = np.empty((len(BODIES), 3))
        _core._planet_positions(t, elems, epoch0_jd, tu_s, out)
        ref = _planet_positions_au(ctx_rich, t)
        # both Kepler iterations stop at |delta| < 1e-12 rad, so that is
        # the agreement they guarantee (measured worst: 4e-14 au)
        assert np.allclose(out, ref, rtol=0.0, atol=1e-12)


# --- integrator ----------------------------------------------------------------------

def test_dp54_matches_scipy_dop853(ctx_plain):
    flat = _core.flatten_context(ctx_plain)
    res = _core.propagate(_Z0, 0.0, 3.0, flat, rtol=1e-11, atol=1e-11)
    assert res.ok and res.t_end == 3.0

    sol = solve_ivp(lambda t, z: _core.rhs(t, z, flat), (0.0, 3.0), _Z0,
                    method="DOP853", rtol=1e-11, atol=1e-11)
    assert sol.success
    scale = 1.0 + np.abs(sol.y[:, -1])
    assert np.max(np.abs(res.z_end - sol.y[:, -1]) / scale) < 1e-8
    assert res.z_end[6] < 1.0  # the arc burns propellant


def test_forward_backward_round_trip(ctx_plain):
    flat = _core.flatten_context(ctx_plain)
    fwd = _core.propagate(_Z0, 0.0, 2.0, flat)
    assert fwd.ok
    back = _core.propagate(fwd.z_end, 2.0, 0.0, flat)
    assert back.ok and back.t_end == 0.0
    scale = 1.0 + np.abs(_Z0)
    assert np.max(np.abs(back.z_end - _Z0) / scale) < 1e-8


def test_record_path_contract(ctx_plain):
    flat = _core.flatten_context(ctx_plain)
    res = _core.propagate(_Z0, 0.0, 1.5, flat, record=True)
    assert res.ok
    assert res.t_rec is not None and res.z_rec is not None
    assert res.t_rec[0] == 0.0 and res.t_rec[-1] == 1.5
    assert np.array_equal(res.z_rec[0], _Z0)
    assert np.array_equal(res.z_rec[-1], res.z_end)
    assert np.all(np.diff(res.t_rec) > 0)
    assert res.z_rec.shape == (len(res.t_rec), 14)
    # the mass column never increases
    assert np.all(np.diff(res.z_rec[:, 6]) <= 0)


def test_record_zero_span(ctx_plain):
    flat = _core.flatten_context(ctx_plain)
    res = _core.propagate(_Z0, 0.5, 0.5, flat, record=True)
    assert res.ok
    assert np.array_equal(res.t_rec, [0.5])
    assert np.array_equal(res.z_rec[0], _Z0)


def test_status_step_budget(ctx_plain):
    flat = _core.flatten_context(ctx_plain)
    res = _core.propagate(_Z0, 0.0, 5.0, flat, max_steps=5)
    assert res.status == _core.STATUS_MAX_STEPS
    assert not res.ok
    assert res.t_end < 5.0


def test_status_mass_floor(ctx_plain):
    flat = _core.flatten_context(ctx_plain)
    x0 = _Z0[:6].copy()
    lam = _Z0[7:13].copy()
    z0 = pack(x0, 2e-3, lam, 0.0)  # thrust on, barely any propellant
    res = _core.propagate(z0, 0.0, 0.2, flat)
    assert res.status == _core.STATUS_MASS_FLOOR
    assert res.z_end[6] <= 1e-3 + 1e-6
    assert 0.0 < res.t_end < 0.2


def test_status_state_escape(ctx_plain):
    flat = _core.flatten_context(ctx_plain)
    z0 = _Z0.copy()
    z0[0] = 2e8  # past the sanity bound on the semi-latus rectum
    res = _core.propagate(z0, 0.0, 1.0, flat)
    assert res.status == _core.STATUS_BAD_STATE


# --- fallback without numba -----------------------------------------------------------

def test_numba_is_available_here():
    # the consistency suite above exercises the compiled path; this pins
    # that fact so a silently missing numba cannot fake coverage
    assert _core.HAVE_NUMBA


def test_pure_python_fallback_matches_compiled(ctx_plain):
    """Import _core with numba masked out and compare one RHS evaluation."""
    flat = _core.flatten_context(ctx_plain)
    t_probe = 0.3
    fast_rhs = _core.rhs(t_probe, _Z0, flat)
    fast_ham = _core.hamiltonian(t_probe, _Z0, flat)

    script = textwrap.dedent("""
        import sys, types
        sys.modules["numba"] = types.ModuleType("numba")  # has no njit
        import numpy as np
        from csctraj import _core
        from csctraj.adjoint import make_context, pack
        from csctraj.control import SmoothingParams
        from csctraj.dynamics import CanonicalUnits
        from csctraj.engines import load_catalog
        from csctraj.modes import default_cap, enumerate_same_type, \\
            same_type_cluster
        from csctraj.power import PowerModel

        assert not _core.HAVE_NUMBA
        power = PowerModel(p0_bol_kw=30.0, p_bus_kw=0.5)
        table = enumerate_same_type(load_catalog(), same_type_cluster(3, 4),
                                    default_cap(power))
        ctx = make_context(table, CanonicalUnits(mass_ref_kg=3000.0), power,
                           SmoothingParams(rho_b=1e-2, rho_c=1e-2))
        flat = _core.flatten_context(ctx)
        z0 = pack(np.array([1.2, 0.05, -0.03, 0.02, -0.01, 0.7]), 1.0,
                  np.array([0.2, -0.4, 0.3, 0.1, -0.2, 0.5]), -0.5)
        vals = list(_core.rhs(0.3, z0, flat)) + [_core.hamiltonian(0.3, z0, flat)]
        print(" ".join(repr(float(v)) for v in vals))
    """)
    proc = subprocess.run([sys.executable, "-c", script],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    values = np.array([float(tok) for tok in proc.stdout.split()])
    assert values.shape == (15,)
    assert np.allclose(values[:14], fast_rhs, rtol=1e-12, atol=1e-14)
    assert values[14] == pytest.approx(fast_ham, rel=1e-12)
