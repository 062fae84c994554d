"""Compiled inner loop: smoothed augmented dynamics plus an adaptive RK5(4).

The reference implementations live in adjoint.py / dynamics.py; this module
repeats them in a flat, allocation-light form that numba can compile, because
a continuation run needs on the order of a thousand trajectory propagations
and the interpreted right-hand side is two orders of magnitude too slow for
that. tests/test_core_consistency.py pins this module against the reference
path, so any edit here must keep the two numerically identical.

Everything is canonical: lengths in AU, mu_sun = 1, time in canonical units,
mass in units of the reference mass. The state vector is
z = [p, f, g, h, k, l, m, lam_p, lam_f, lam_g, lam_h, lam_k, lam_l, lam_m].

Context arrays are packed into a flat tuple once per problem (FlatContext);
njit functions unpack it positionally. Layout:

  0 p_used_w   (n_modes,)  mode power draw ladder, watts, descending
  1 gamma      (n_modes,K) channel weights per mode
  2 t_end      (K,)        channel endpoint thrust, canonical
  3 c_end      (K,)        channel exhaust velocity, canonical
  4 pw         (10,)       [p0_kw, decay/yr, p_bus_kw, rho_c_ref_w,
                            poly_flag, a1, a2, a3, a4, a5]
  5 rho_b      float
  6 rho_c      float
  7 mu_b       (NB,)       third-body gravitational parameters, canonical
  8 elems      (NB,12)     [a, a', e, e', i, i', L, L', varpi, varpi', Om, Om']
                           angles in rad, rates per Julian century, a in AU
  9 epoch0_jd  float       julian date of t = 0
 10 tu_s       float       seconds per canonical time unit

Integrator status codes: 0 reached the end time, 1 step underflow or a
non-finite state, 2 step budget exhausted, 3 mass fell through the floor.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - the sandbox ships numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


_CSTEP = 1e-30
_PRIMER_FLOOR = 1e-14
_TANH_SAT = 60.0
_MASS_FLOOR = 1e-3

STATUS_OK = 0
STATUS_BAD_STATE = 1
STATUS_MAX_STEPS = 2
STATUS_MASS_FLOOR = 3


@dataclass(frozen=True)
class FlatContext:
    """Problem data flattened for the compiled kernels."""

    args: tuple

    @property
    def n_channels(self) -> int:
        return len(self.args[2])


def flatten_context(ctx) -> FlatContext:
    """Build a FlatContext from an adjoint.ProblemContext."""
    from .dynamics import MU_SUN_KM3_S2

    power = ctx.power
    if power.phi_coeffs is None:
        pw = np.array([power.p0_bol_kw, power.decay_rate_per_year,
                       power.p_bus_kw, power.rho_c_reference_w,
                       0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    else:
        pw = np.array([power.p0_bol_kw, power.decay_rate_per_year,
                       power.p_bus_kw, power.rho_c_reference_w,
                       1.0, *power.phi_coeffs])

    nb = len(ctx.bodies)
    mu_b = np.zeros(nb)
    elems = np.zeros((nb, 12))
    for idx, name in enumerate(ctx.bodies):
        body = ctx.ephemeris[name]
        mu_b[idx] = body.mu_km3_s2 / MU_SUN_KM3_S2
        d = math.pi / 180.0
        elems[idx] = [body.a_au, body.a_dot, body.e, body.e_dot,
                      body.i_deg * d, body.i_dot * d,
                      body.L_deg * d, body.L_dot * d,
                      body.varpi_deg * d, body.varpi_dot * d,
                      body.Omega_deg * d, body.Omega_dot * d]

    return FlatContext(args=(
        np.ascontiguousarray(ctx.p_used_w, dtype=np.float64),
        np.ascontiguousarray(ctx.gamma_matrix, dtype=np.float64),
        np.ascontiguousarray(ctx.t_end, dtype=np.float64),
        np.ascontiguousarray(ctx.c_end, dtype=np.float64),
        pw, float(ctx.rho.rho_b), float(ctx.rho.rho_c),
        mu_b, elems, float(ctx.epoch0_jd), float(ctx.units.tu_s)))


@njit(cache=True)
def _ctanh(z):
    # cmath.tanh is exact enough, but saturate far from the transition so the
    # intermediate cosh cannot overflow; past +-60 the discarded derivative
    # is below 1e-52 and the value is 1.0 to the last bit either way.
    if z.real > _TANH_SAT:
        return 1.0 + 0.0j
    if z.real < -_TANH_SAT:
        return -1.0 + 0.0j
    return cmath.tanh(z)


@njit(cache=True)
def _kepler_ecc_anomaly(mean_anom, ecc):
    m = mean_anom % (2.0 * math.pi)
    if m > math.pi:
        m -= 2.0 * math.pi
    e_anom = m + ecc * math.sin(m)
    for _ in range(50):
        delta = (e_anom - ecc * math.sin(e_anom) - m) / (1.0 - ecc * math.cos(e_anom))
        e_anom -= delta
        if abs(delta) < 1e-12:
            break
    return e_anom


@njit(cache=True)
def _planet_positions(t, elems, epoch0_jd, tu_s, out):
    jd = epoch0_jd + t * tu_s / 86400.0
    cent = (jd - 2451545.0) / 36525.0
    for b in range(elems.shape[0]):
        a = elems[b, 0] + elems[b, 1] * cent
        e = elems[b, 2] + elems[b, 3] * cent
        inc = elems[b, 4] + elems[b, 5] * cent
        mean_lon = elems[b, 6] + elems[b, 7] * cent
        varpi = elems[b, 8] + elems[b, 9] * cent
        node = elems[b, 10] + elems[b, 11] * cent
        argp = varpi - node
        e_anom = _kepler_ecc_anomaly(mean_lon - varpi, e)
        xp = a * (math.cos(e_anom) - e)
        yp = a * math.sqrt(1.0 - e * e) * math.sin(e_anom)
        cw, sw = math.cos(argp), math.sin(argp)
        co, so = math.cos(node), math.sin(node)
        ci, si = math.cos(inc), math.sin(inc)
        out[b, 0] = (cw * co - sw * so * ci) * xp + (-sw * co - cw * so * ci) * yp
        out[b, 1] = (cw * so + sw * co * ci) * xp + (-sw * so + cw * co * ci) * yp
        out[b, 2] = (sw * si) * xp + (cw * si) * yp


@njit(cache=True)
def _psi_factor(t, pw, tu_s):
    decay = pw[1]
    if decay == 0.0:
        return 1.0
    tau_years = t * tu_s / 86400.0 / 365.25
    return (1.0 - decay) ** tau_years


@njit(cache=True)
def _ham_cplx(x, m, lam, lam_m, psi, planet_rs, args):
    """Norm-form smoothed Hamiltonian, complex-safe in (x, m)."""
    p_used, gamma, t_end, c_end, pw, rho_b, rho_c, mu_b, elems, epoch0_jd, tu_s = args
    p, f, g, h, k, l = x[0], x[1], x[2], x[3], x[4], x[5]
    cl = cmath.cos(l)
    sl = cmath.sin(l)
    w = 1.0 + f * cl + g * sl
    s2 = 1.0 + h * h + k * k
    root = cmath.sqrt(p)
    hk = h * sl - k * cl

    # lam^T B, scaled by sqrt(p)
    lb0 = root * (lam[1] * sl - lam[2] * cl)
    lb1 = root * (lam[0] * 2.0 * p / w
                  + lam[1] * ((w + 1.0) * cl + f) / w
                  + lam[2] * ((w + 1.0) * sl + g) / w)
    lb2 = root * (-lam[1] * g * hk / w + lam[2] * f * hk / w
                  + lam[3] * s2 * cl / (2.0 * w)
                  + lam[4] * s2 * sl / (2.0 * w)
                  + lam[5] * hk / w)
    lam_b_norm = cmath.sqrt(lb0 * lb0 + lb1 * lb1 + lb2 * lb2)

    ham = lam[5] * root * (w / p) ** 2

    alpha2 = h * h - k * k
    r_mag = p / w
    rx = (r_mag / s2) * (cl + alpha2 * cl + 2.0 * h * k * sl)
    ry = (r_mag / s2) * (sl - alpha2 * sl + 2.0 * h * k * cl)
    rz = (2.0 * r_mag / s2) * (h * sl - k * cl)
    r = cmath.sqrt(rx * rx + ry * ry + rz * rz)

    if mu_b.shape[0] > 0:
        sq = cmath.sqrt(1.0 / p)
        vx = -(sq / s2) * (sl + alpha2 * sl - 2.0 * h * k * cl + g - 2.0 * f * h * k + alpha2 * g)
        vy = -(sq / s2) * (-cl + alpha2 * cl + 2.0 * h * k * sl - f + 2.0 * g * h * k + alpha2 * f)
        vz = (2.0 * sq / s2) * (h * cl + k * sl + f * h + g * k)
        ax = 0.0 + 0.0j
        ay = 0.0 + 0.0j
        az = 0.0 + 0.0j
        for b in range(mu_b.shape[0]):
            dx = planet_rs[b, 0] - rx
            dy = planet_rs[b, 1] - ry
            dz = planet_rs[b, 2] - rz
            d3 = cmath.sqrt(dx * dx + dy * dy + dz * dz) ** 3
            rb3 = math.sqrt(planet_rs[b, 0] ** 2 + planet_rs[b, 1] ** 2
                            + planet_rs[b, 2] ** 2) ** 3
            ax += mu_b[b] * (dx / d3 - planet_rs[b, 0] / rb3)
            ay += mu_b[b] * (dy / d3 - planet_rs[b, 1] / rb3)
            az += mu_b[b] * (dz / d3 - planet_rs[b, 2] / rb3)
        rhx, rhy, rhz = rx / r, ry / r, rz / r
        nx = ry * vz - rz * vy
        ny = rz * vx - rx * vz
        nz = rx * vy - ry * vx
        nn = cmath.sqrt(nx * nx + ny * ny + nz * nz)
        nhx, nhy, nhz = nx / nn, ny / nn, nz / nn
        thx = nhy * rhz - nhz * rhy
        thy = nhz * rhx - nhx * rhz
        thz = nhx * rhy - nhy * rhx
        a_r = ax * rhx + ay * rhy + az * rhz
        a_t = ax * thx + ay * thy + az * thz
        a_n = ax * nhx + ay * nhy + az * nhz
        ham += lb0 * a_r + lb1 * a_t + lb2 * a_n

    if pw[4] > 0.5:
        phi = (pw[5] + pw[6] / r + pw[7] / (r * r) + pw[8] * r + pw[9] * r * r) / (r * r)
    else:
        phi = 1.0 / (r * r)
    p_ava = (psi * phi * pw[0] - pw[2]) * 1000.0
    scale = 1.0 / (pw[3] * rho_c)

    n_modes = p_used.shape[0]
    n_ch = t_end.shape[0]
    gam = np.zeros(n_ch, dtype=np.complex128)
    for i in range(n_modes):
        wi = 0.5 * (1.0 - _ctanh((p_used[i] - p_ava) * scale))
        if i > 0:
            wi = wi * 0.5 * (1.0 - _ctanh((p_ava - p_used[i - 1]) * scale))
        for ch in range(n_ch):
            gam[ch] += wi * gamma[i, ch]

    acc = 0.0 + 0.0j
    for ch in range(n_ch):
        s_val = lam_b_norm / m + lam_m / c_end[ch]
        zeta = 0.5 * (1.0 + _ctanh(s_val / rho_b))
        acc += gam[ch] * zeta * t_end[ch] * s_val
    return ham - acc


@njit(cache=True)
def _costate_rates(x, m, lam, lam_m, psi, planet_rs, args, out):
    xc = np.empty(6, dtype=np.complex128)
    for j in range(6):
        xc[j] = complex(x[j], 0.0)
    for j in range(6):
        xc[j] = complex(x[j], _CSTEP)
        ham = _ham_cplx(xc, complex(m, 0.0), lam, lam_m, psi, planet_rs, args)
        out[j] = -ham.imag / _CSTEP
        xc[j] = complex(x[j], 0.0)
    ham = _ham_cplx(xc, complex(m, _CSTEP), lam, lam_m, psi, planet_rs, args)
    out[6] = -ham.imag / _CSTEP


@njit(cache=True)
def _rhs(t, z, args, out):
    """d/dt of the augmented 14-vector, written into out."""
    p_used, gamma, t_end, c_end, pw, rho_b, rho_c, mu_b, elems, epoch0_jd, tu_s = args
    nb = mu_b.shape[0]
    planet_rs = np.empty((nb, 3))
    if nb > 0:
        _planet_positions(t, elems, epoch0_jd, tu_s, planet_rs)
    psi = _psi_factor(t, pw, tu_s)

    p, f, g, h, k, l = z[0], z[1], z[2], z[3], z[4], z[5]
    m = z[6]
    lam = z[7:13]
    lam_m = z[13]

    cl = math.cos(l)
    sl = math.sin(l)
    w = 1.0 + f * cl + g * sl
    s2 = 1.0 + h * h + k * k
    root = math.sqrt(p)
    hk = h * sl - k * cl

    # B matrix, row-major, scaled by sqrt(p)
    b01 = root * 2.0 * p / w
    b10 = root * sl
    b11 = root * ((w + 1.0) * cl + f) / w
    b12 = root * (-g * hk / w)
    b20 = root * (-cl)
    b21 = root * ((w + 1.0) * sl + g) / w
    b22 = root * (f * hk / w)
    b32 = root * s2 * cl / (2.0 * w)
    b42 = root * s2 * sl / (2.0 * w)
    b52 = root * hk / w

    lb0 = lam[1] * b10 + lam[2] * b20
    lb1 = lam[0] * b01 + lam[1] * b11 + lam[2] * b21
    lb2 = lam[1] * b12 + lam[2] * b22 + lam[3] * b32 + lam[4] * b42 + lam[5] * b52
    lam_b_norm = math.sqrt(lb0 * lb0 + lb1 * lb1 + lb2 * lb2)

    alpha2 = h * h - k * k
    r_mag = p / w
    rx = (r_mag / s2) * (cl + alpha2 * cl + 2.0 * h * k * sl)
    ry = (r_mag / s2) * (sl - alpha2 * sl + 2.0 * h * k * cl)
    rz = (2.0 * r_mag / s2) * (h * sl - k * cl)
    r = math.sqrt(rx * rx + ry * ry + rz * rz)

    a_sb_r = 0.0
    a_sb_t = 0.0
    a_sb_n = 0.0
    if nb > 0:
        sq = math.sqrt(1.0 / p)
        vx = -(sq / s2) * (sl + alpha2 * sl - 2.0 * h * k * cl + g - 2.0 * f * h * k + alpha2 * g)
        vy = -(sq / s2) * (-cl + alpha2 * cl + 2.0 * h * k * sl - f + 2.0 * g * h * k + alpha2 * f)
        vz = (2.0 * sq / s2) * (h * cl + k * sl + f * h + g * k)
        ax = 0.0
        ay = 0.0
        az = 0.0
        for b in range(nb):
            dx = planet_rs[b, 0] - rx
            dy = planet_rs[b, 1] - ry
            dz = planet_rs[b, 2] - rz
            d3 = math.sqrt(dx * dx + dy * dy + dz * dz) ** 3
            rb3 = math.sqrt(planet_rs[b, 0] ** 2 + planet_rs[b, 1] ** 2
                            + planet_rs[b, 2] ** 2) ** 3
            ax += mu_b[b] * (dx / d3 - planet_rs[b, 0] / rb3)
            ay += mu_b[b] * (dy / d3 - planet_rs[b, 1] / rb3)
            az += mu_b[b] * (dz / d3 - planet_rs[b, 2] / rb3)
        rhx, rhy, rhz = rx / r, ry / r, rz / r
        nx = ry * vz - rz * vy
        ny = rz * vx - rx * vz
        nz = rx * vy - ry * vx
        nn = math.sqrt(nx * nx + ny * ny + nz * nz)
        nhx, nhy, nhz = nx / nn, ny / nn, nz / nn
        thx = nhy * rhz - nhz * rhy
        thy = nhz * rhx - nhx * rhz
        thz = nhx * rhy - nhy * rhx
        a_sb_r = ax * rhx + ay * rhy + az * rhz
        a_sb_t = ax * thx + ay * thy + az * thz
        a_sb_n = ax * nhx + ay * nhy + az * nhz

    if pw[4] > 0.5:
        phi = (pw[5] + pw[6] / r + pw[7] / (r * r) + pw[8] * r + pw[9] * r * r) / (r * r)
    else:
        phi = 1.0 / (r * r)
    p_ava = (psi * phi * pw[0] - pw[2]) * 1000.0
    scale = 1.0 / (pw[3] * rho_c)

    n_modes = p_used.shape[0]
    n_ch = t_end.shape[0]
    gam = np.zeros(n_ch)
    for i in range(n_modes):
        arg = (p_used[i] - p_ava) * scale
        if arg > _TANH_SAT:
            continue
        wi = 0.5 * (1.0 - math.tanh(arg)) if arg > -_TANH_SAT else 1.0
        if i > 0:
            arg2 = (p_ava - p_used[i - 1]) * scale
            if arg2 > _TANH_SAT:
                continue
            if arg2 > -_TANH_SAT:
                wi *= 0.5 * (1.0 - math.tanh(arg2))
        for ch in range(n_ch):
            gam[ch] += wi * gamma[i, ch]
    thrust = 0.0
    mdot = 0.0
    for ch in range(n_ch):
        s_val = lam_b_norm / m + lam_m / c_end[ch]
        sarg = s_val / rho_b
        zeta = 0.5 * (1.0 + math.tanh(sarg)) if abs(sarg) < _TANH_SAT else (1.0 if sarg > 0 else 0.0)
        thrust += gam[ch] * zeta * t_end[ch]
        mdot -= gam[ch] * zeta * t_end[ch] / c_end[ch]

    acc_r = a_sb_r
    acc_t = a_sb_t
    acc_n = a_sb_n
    if lam_b_norm >= _PRIMER_FLOOR:
        acc_scale = thrust / (m * lam_b_norm)
        acc_r -= acc_scale * lb0
        acc_t -= acc_scale * lb1
        acc_n -= acc_scale * lb2
    else:
        mdot = 0.0

    out[0] = b01 * acc_t
    out[1] = b10 * acc_r + b11 * acc_t + b12 * acc_n
    out[2] = b20 * acc_r + b21 * acc_t + b22 * acc_n
    out[3] = b32 * acc_n
    out[4] = b42 * acc_n
    out[5] = root * (w / p) ** 2 + b52 * acc_n
    out[6] = mdot

    xx = z[0:6].copy()
    rates = np.empty(7)
    _costate_rates(xx, m, lam.copy(), lam_m, psi, planet_rs, args, rates)
    for j in range(7):
        out[7 + j] = rates[j]


@njit(cache=True)
def hamiltonian_flat(t, z, args):
    """Real smoothed Hamiltonian at one point (diagnostics, drift checks)."""
    p_used, gamma, t_end, c_end, pw, rho_b, rho_c, mu_b, elems, epoch0_jd, tu_s = args
    nb = mu_b.shape[0]
    planet_rs = np.empty((nb, 3))
    if nb > 0:
        _planet_positions(t, elems, epoch0_jd, tu_s, planet_rs)
    psi = _psi_factor(t, pw, tu_s)
    xc = np.empty(6, dtype=np.complex128)
    for j in range(6):
        xc[j] = complex(z[j], 0.0)
    ham = _ham_cplx(xc, complex(z[6], 0.0), z[7:13].copy(), z[13], psi, planet_rs, args)
    return ham.real


# --- Dormand-Prince 5(4) with FSAL and a standard step controller -----------

_DP_C2, _DP_C3, _DP_C4, _DP_C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


@njit(cache=True)
def _err_norm(err, y0, y1, rtol, atol):
    acc = 0.0
    n = err.shape[0]
    for i in range(n):
        sc = atol + rtol * max(abs(y0[i]), abs(y1[i]))
        acc += (err[i] / sc) ** 2
    return math.sqrt(acc / n)


@njit(cache=True)
def integrate(z0, t0, t1, args, rtol, atol, max_steps, record, rec_t, rec_z):
    """Propagate z from t0 to t1. Returns (status, z_end, t_end, n_recorded).

    When record is true every accepted step lands in rec_t / rec_z, which the
    caller preallocates with max_steps + 1 rows; row 0 is the initial state.
    """
    n = z0.shape[0]
    y = z0.copy()
    t = t0
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    if span == 0.0:
        if record:
            rec_t[0] = t0
            for i in range(n):
                rec_z[0, i] = y[i]
        return STATUS_OK, y, t, 1

    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ytmp = np.empty(n)
    ynew = np.empty(n)
    err = np.empty(n)

    _rhs(t, y, args, k1)

    # Hairer-style initial step guess
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (k1[i] / sc) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6 * span
    else:
        h = 0.01 * d0 / d1
    h = min(h, span)

    h_min = 1e-14 * max(span, 1.0)
    nrec = 0
    if record:
        rec_t[0] = t
        for i in range(n):
            rec_z[0, i] = y[i]
        nrec = 1

    steps = 0
    while direction * (t1 - t) > 0.0:
        steps += 1
        if steps > max_steps:
            return STATUS_MAX_STEPS, y, t, nrec
        remaining = abs(t1 - t)
        last = False
        if h >= remaining:
            h = remaining
            last = True
        hd = direction * h

        for i in range(n):
            ytmp[i] = y[i] + hd * _A21 * k1[i]
        _rhs(t + _DP_C2 * hd, ytmp, args, k2)
        for i in range(n):
            ytmp[i] = y[i] + hd * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(t + _DP_C3 * hd, ytmp, args, k3)
        for i in range(n):
            ytmp[i] = y[i] + hd * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(t + _DP_C4 * hd, ytmp, args, k4)
        for i in range(n):
            ytmp[i] = y[i] + hd * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        _rhs(t + _DP_C5 * hd, ytmp, args, k5)
        for i in range(n):
            ytmp[i] = y[i] + hd * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                   + _A64 * k4[i] + _A65 * k5[i])
        _rhs(t + hd, ytmp, args, k6)
        for i in range(n):
            ynew[i] = y[i] + hd * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                   + _B5 * k5[i] + _B6 * k6[i])
        _rhs(t + hd, ynew, args, k7)
        for i in range(n):
            err[i] = hd * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                           + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])

        bad = False
        for i in range(n):
            if not (math.isfinite(ynew[i]) and math.isfinite(err[i])):
                bad = True
                break
        if bad:
            h *= 0.25
            if h < h_min:
                return STATUS_BAD_STATE, y, t, nrec
            continue

        errn = _err_norm(err, y, ynew, rtol, atol)
        if errn <= 1.0:
            t = t1 if last else t + hd
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            if y[6] <= _MASS_FLOOR:
                return STATUS_MASS_FLOOR, y, t, nrec
            if y[0] <= 1e-8 or abs(y[0]) > 1e8:
                return STATUS_BAD_STATE, y, t, nrec
            big = False
            for i in range(n):
                if abs(y[i]) > 1e10:
                    big = True
                    break
            if big:
                return STATUS_BAD_STATE, y, t, nrec
            if record:
                rec_t[nrec] = t
                for i in range(n):
                    rec_z[nrec, i] = y[i]
                nrec += 1
            if errn == 0.0:
                factor = 5.0
            else:
                factor = min(5.0, max(0.2, 0.9 * errn ** -0.2))
        else:
            factor = max(0.2, 0.9 * errn ** -0.2)
        h *= factor
        if h < h_min:
            return STATUS_BAD_STATE, y, t, nrec

    return STATUS_OK, y, t, nrec


@dataclass(frozen=True)
class PropagationResult:
    status: int
    z_end: np.ndarray
    t_end: float
    t_rec: np.ndarray | None = None
    z_rec: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


def propagate(z0, t0: float, t1: float, flat: FlatContext, rtol: float = 1e-11,
              atol: float = 1e-11, record: bool = False,
              max_steps: int = 200_000) -> PropagationResult:
    """Python entry point for the compiled integrator."""
    z0 = np.ascontiguousarray(z0, dtype=np.float64)
    if record:
        rec_t = np.empty(max_steps + 1)
        rec_z = np.empty((max_steps + 1, z0.shape[0]))
    else:
        rec_t = np.empty(1)
        rec_z = np.empty((1, z0.shape[0]))
    status, z_end, t_end, nrec = integrate(
        z0, float(t0), float(t1), flat.args, float(rtol), float(atol),
        int(max_steps), record, rec_t, rec_z)
    if record:
        return PropagationResult(status, z_end, t_end,
                                 rec_t[:nrec].copy(), rec_z[:nrec].copy())
    return PropagationResult(status, z_end, t_end)


def rhs(t: float, z, flat: FlatContext) -> np.ndarray:
    """One right-hand-side evaluation through the compiled path."""
    out = np.empty(14)
    _rhs(float(t), np.ascontiguousarray(z, dtype=np.float64), flat.args, out)
    return out


def hamiltonian(t: float, z, flat: FlatContext) -> float:
    return float(hamiltonian_flat(float(t), np.ascontiguousarray(z, dtype=np.float64),
                                  flat.args))
