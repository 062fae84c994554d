"""Hamiltonian assembly and the augmented state-costate dynamics.

The Hamiltonian is written in norm form: the steering direction is eliminated
analytically via lambda^T B alpha_hat = -|lambda^T B|, which bakes the primer
envelope property into every derivative taken here. Costate rates are exact
partials of this control-substituted smoothed Hamiltonian with respect to
(x, m), obtained by complex-step differentiation (step 1e-30) through the
whole expression: power model, activation weights, switching activations, and
third-body terms. Planet positions depend only on time, so they are computed
once per evaluation point and enter the perturbed evaluations as constants.

All quantities are canonical (AU, mu_sun = 1, reference mass = initial mass)
unless suffixed otherwise. The augmented vector is
z = [p, f, g, h, k, l, m, lam_p, lam_f, lam_g, lam_h, lam_k, lam_l, lam_m].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import (
    PRIMER_NORM_FLOOR,
    ControlDecision,
    SmoothingParams,
    smooth_control,
)
from .dynamics import (
    AU_KM,
    DAY_S,
    J2000_JD,
    CanonicalUnits,
    Ephemeris,
    planet_position,
)
from .modes import ModeTable
from .power import PowerModel

_CSTEP = 1e-30


@dataclass(frozen=True)
class Costates:
    lam_mee: tuple[float, float, float, float, float, float]
    lam_m: float

    def as_array(self) -> np.ndarray:
        return np.array([*self.lam_mee, self.lam_m])


@dataclass(frozen=True)
class AugmentedState:
    x: np.ndarray
    m: float
    lam: np.ndarray
    lam_m: float
    t: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, [self.m], self.lam, [self.lam_m]])


def pack(x, m, lam, lam_m) -> np.ndarray:
    return np.concatenate([np.asarray(x, dtype=float), [m],
                           np.asarray(lam, dtype=float), [lam_m]])


def unpack(z):
    z = np.asarray(z)
    return z[0:6], z[6], z[7:13], z[13]


@dataclass(frozen=True)
class ProblemContext:
    """Everything the augmented dynamics needs besides (t, z)."""

    table: ModeTable
    units: CanonicalUnits
    power: PowerModel
    rho: SmoothingParams
    epoch0_jd: float = J2000_JD
    ephemeris: Ephemeris | None = None
    bodies: tuple[str, ...] = ()
    # canonical per-channel endpoint thrust and exhaust velocity
    t_end: np.ndarray = None
    c_end: np.ndarray = None
    gamma_matrix: np.ndarray = None
    p_used_w: np.ndarray = None

    def with_rho(self, rho: SmoothingParams) -> "ProblemContext":
        return ProblemContext(
            table=self.table, units=self.units, power=self.power, rho=rho,
            epoch0_jd=self.epoch0_jd, ephemeris=self.ephemeris, bodies=self.bodies,
            t_end=self.t_end, c_end=self.c_end, gamma_matrix=self.gamma_matrix,
            p_used_w=self.p_used_w)


def make_context(table: ModeTable, units: CanonicalUnits, power: PowerModel,
                 rho: SmoothingParams, epoch0_jd: float = J2000_JD,
                 ephemeris: Ephemeris | None = None, bodies=()) -> ProblemContext:
    t_end = np.array([units.thrust_to_canonical(ch.thrust_mn) for ch in table.channels])
    c_end = np.array([units.c_to_canonical(ch.c_m_s) for ch in table.channels])
    gamma_matrix = np.asarray(table.gamma_rows, dtype=float)
    p_used_w = np.array(table.p_used())
    if bodies and ephemeris is None:
        raise ValueError("third-body list given without an ephemeris")
    return ProblemContext(
        table=table, units=units, power=power, rho=rho, epoch0_jd=epoch0_jd,
        ephemeris=ephemeris, bodies=tuple(bodies), t_end=t_end, c_end=c_end,
        gamma_matrix=gamma_matrix, p_used_w=p_used_w)


# --- complex-safe building blocks -------------------------------------------
# These mirror dynamics.two_body_term / control_influence / rv_from_mee but
# accept complex components; norms are sqrt of the plain (unconjugated) square
# sum so a complex step propagates as a true directional derivative.

def _sqnorm_sqrt(v):
    return np.sqrt(np.sum(v * v))


def _mee_a(x):
    p, f, g, _, _, l = x
    w = 1.0 + f * np.cos(l) + g * np.sin(l)
    a = np.zeros(6, dtype=np.result_type(x, float))
    a[5] = np.sqrt(p) * (w / p) ** 2
    return a


def _mee_b(x):
    p, f, g, h, k, l = x
    cl, sl = np.cos(l), np.sin(l)
    w = 1.0 + f * cl + g * sl
    s2 = 1.0 + h * h + k * k
    root = np.sqrt(p)
    hk = h * sl - k * cl
    b = np.zeros((6, 3), dtype=np.result_type(x, float))
    b[0, 1] = 2.0 * p / w
    b[1, 0] = sl
    b[1, 1] = ((w + 1.0) * cl + f) / w
    b[1, 2] = -g * hk / w
    b[2, 0] = -cl
    b[2, 1] = ((w + 1.0) * sl + g) / w
    b[2, 2] = f * hk / w
    b[3, 2] = s2 * cl / (2.0 * w)
    b[4, 2] = s2 * sl / (2.0 * w)
    b[5, 2] = hk / w
    return root * b


def _mee_rv(x):
    p, f, g, h, k, l = x
    cl, sl = np.cos(l), np.sin(l)
    alpha2 = h * h - k * k
    s2 = 1.0 + h * h + k * k
    w = 1.0 + f * cl + g * sl
    r_mag = p / w
    sq = np.sqrt(1.0 / p)
    dtype = np.result_type(x, float)
    r = np.array([
        (r_mag / s2) * (cl + alpha2 * cl + 2.0 * h * k * sl),
        (r_mag / s2) * (sl - alpha2 * sl + 2.0 * h * k * cl),
        (2.0 * r_mag / s2) * (h * sl - k * cl)], dtype=dtype)
    v = np.array([
        -(sq / s2) * (sl + alpha2 * sl - 2.0 * h * k * cl + g - 2.0 * f * h * k + alpha2 * g),
        -(sq / s2) * (-cl + alpha2 * cl + 2.0 * h * k * sl - f + 2.0 * g * h * k + alpha2 * f),
        (2.0 * sq / s2) * (h * cl + k * sl + f * h + g * k)], dtype=dtype)
    return r, v


def _planet_positions_au(ctx: ProblemContext, t: float) -> np.ndarray:
    """Real heliocentric planet positions at canonical time t, in AU."""
    if not ctx.bodies:
        return np.zeros((0, 3))
    jd = ctx.epoch0_jd + t * ctx.units.tu_s / DAY_S
    return np.array([planet_position(ctx.ephemeris, b, jd) / AU_KM for b in ctx.bodies])


def _mu_bodies_canonical(ctx: ProblemContext) -> np.ndarray:
    from .dynamics import MU_SUN_KM3_S2
    return np.array([ctx.ephemeris[b].mu_km3_s2 / MU_SUN_KM3_S2 for b in ctx.bodies])


def _a_sb_lvlh(x, planet_rs, mu_b):
    """Third-body acceleration resolved on the LVLH axes; complex-safe in x."""
    r_vec, v_vec = _mee_rv(x)
    acc = np.zeros(3, dtype=np.result_type(x, float))
    for r_b, mu in zip(planet_rs, mu_b):
        d = r_b - r_vec
        d3 = _sqnorm_sqrt(d) ** 3
        rb3 = float(np.linalg.norm(r_b)) ** 3
        acc = acc + mu * (d / d3 - r_b / rb3)
    # radial / transverse / normal triad
    r_hat = r_vec / _sqnorm_sqrt(r_vec)
    n_vec = np.cross(r_vec, v_vec)
    n_hat = n_vec / _sqnorm_sqrt(n_vec)
    t_hat = np.cross(n_hat, r_hat)
    return np.array([acc @ r_hat, acc @ t_hat, acc @ n_hat])


def _available_power_w(ctx: ProblemContext, x, t: float):
    """P_ava in watts; complex-safe in x, real in t."""
    r_vec, _ = _mee_rv(x)
    r = _sqnorm_sqrt(r_vec)
    tau_years = t * ctx.units.tu_s / DAY_S / 365.25
    psi = (1.0 - ctx.power.decay_rate_per_year) ** tau_years
    if ctx.power.phi_coeffs is None:
        phi = 1.0 / (r * r)
    else:
        a1, a2, a3, a4, a5 = ctx.power.phi_coeffs
        phi = (a1 + a2 / r + a3 / (r * r) + a4 * r + a5 * r * r) / (r * r)
    return (psi * phi * ctx.power.p0_bol_kw - ctx.power.p_bus_kw) * 1000.0


def _weights(ctx: ProblemContext, p_ava_w):
    scale = 1.0 / (ctx.power.rho_c_reference_w * ctx.rho.rho_c)
    p_used = ctx.p_used_w
    n = len(p_used)
    w = np.empty(n, dtype=np.result_type(p_ava_w, float))
    for i in range(n):
        wi = 0.5 * (1.0 - np.tanh((p_used[i] - p_ava_w) * scale))
        if i > 0:
            wi = wi * 0.5 * (1.0 - np.tanh((p_ava_w - p_used[i - 1]) * scale))
        w[i] = wi
    return w


def _hamiltonian_core(x, m, lam, lam_m, t, ctx, planet_rs, mu_b):
    """Norm-form smoothed Hamiltonian; complex-safe in (x, m)."""
    a_vec = _mee_a(x)
    b_mat = _mee_b(x)
    ham = lam @ a_vec
    if len(ctx.bodies):
        ham = ham + lam @ (b_mat @ _a_sb_lvlh(x, planet_rs, mu_b))

    lam_b = lam @ b_mat
    lam_b_norm = _sqnorm_sqrt(lam_b)

    p_ava = _available_power_w(ctx, x, t)
    w = _weights(ctx, p_ava)
    gammas = w @ ctx.gamma_matrix

    s_vals = lam_b_norm / m + lam_m / ctx.c_end
    zetas = 0.5 * (1.0 + np.tanh(s_vals / ctx.rho.rho_b))
    ham = ham - np.sum(gammas * zetas * ctx.t_end * s_vals)
    return ham


def hamiltonian(z, t: float, ctx: ProblemContext) -> float:
    """Smoothed Hamiltonian with the optimal control substituted."""
    x, m, lam, lam_m = unpack(z)
    planet_rs = _planet_positions_au(ctx, t)
    mu_b = _mu_bodies_canonical(ctx) if len(ctx.bodies) else np.zeros(0)
    return float(np.real(_hamiltonian_core(x, m, lam, lam_m, t, ctx, planet_rs, mu_b)))


def hamiltonian_frozen_alpha(z, t: float, ctx: ProblemContext, alpha_hat) -> float:
    """Hamiltonian with an explicitly supplied steering direction.

    Exists to let tests compare derivatives with alpha re-optimized against
    derivatives with alpha held fixed (the envelope check); the solver never
    calls this.
    """
    x, m, lam, lam_m = unpack(z)
    planet_rs = _planet_positions_au(ctx, t)
    mu_b = _mu_bodies_canonical(ctx) if len(ctx.bodies) else np.zeros(0)

    a_vec = _mee_a(x)
    b_mat = _mee_b(x)
    ham = lam @ a_vec
    if len(ctx.bodies):
        ham = ham + lam @ (b_mat @ _a_sb_lvlh(x, planet_rs, mu_b))

    lam_b = lam @ b_mat
    lam_b_alpha = lam_b @ np.asarray(alpha_hat)
    lam_b_norm = float(np.linalg.norm(lam_b))

    p_ava = _available_power_w(ctx, x, t)
    w = _weights(ctx, p_ava)
    gammas = w @ ctx.gamma_matrix
    s_vals = lam_b_norm / m + lam_m / ctx.c_end
    zetas = 0.5 * (1.0 + np.tanh(s_vals / ctx.rho.rho_b))

    # thrust acceleration along the supplied direction, mass flow as usual
    thrust = np.sum(gammas * zetas * ctx.t_end)
    mdot = -np.sum(gammas * zetas * ctx.t_end / ctx.c_end)
    return float(ham + (thrust / m) * lam_b_alpha + lam_m * mdot)


def hamiltonian_discrete(z, t: float, ctx: ProblemContext, mode_index: int) -> float:
    """Exact Hamiltonian of one discrete choice: mode engaged, channels at
    their pointwise-optimal on/off settings (on iff S > 0)."""
    x, m, lam, lam_m = unpack(z)
    planet_rs = _planet_positions_au(ctx, t)
    mu_b = _mu_bodies_canonical(ctx) if len(ctx.bodies) else np.zeros(0)

    a_vec = _mee_a(x)
    b_mat = _mee_b(x)
    ham = lam @ a_vec
    if len(ctx.bodies):
        ham = ham + lam @ (b_mat @ _a_sb_lvlh(x, planet_rs, mu_b))
    lam_b = lam @ b_mat
    lam_b_norm = float(np.linalg.norm(lam_b))
    s_vals = lam_b_norm / m + lam_m / ctx.c_end
    gammas = ctx.gamma_matrix[mode_index - 1]
    return float(ham - np.sum(gammas * ctx.t_end * np.maximum(s_vals, 0.0)))


def costate_rates(z, t: float, ctx: ProblemContext) -> np.ndarray:
    """[lam_dot (6), lam_m_dot]: minus the complex-step gradient of the
    Hamiltonian in (x, m) at fixed costates."""
    x, m, lam, lam_m = unpack(z)
    planet_rs = _planet_positions_au(ctx, t)
    mu_b = _mu_bodies_canonical(ctx) if len(ctx.bodies) else np.zeros(0)

    rates = np.empty(7)
    for j in range(6):
        xc = x.astype(complex)
        xc[j] += 1j * _CSTEP
        ham = _hamiltonian_core(xc, complex(m), lam, lam_m, t, ctx, planet_rs, mu_b)
        rates[j] = -np.imag(ham) / _CSTEP
    mc = complex(m, _CSTEP)
    ham = _hamiltonian_core(x.astype(complex), mc, lam, lam_m, t, ctx, planet_rs, mu_b)
    rates[6] = -np.imag(ham) / _CSTEP
    if not np.all(np.isfinite(rates)):
        raise FloatingPointError(
            f"non-finite costate rate at t={t}: {rates} (state {x}, m={m})")
    return rates


def evaluate_control(z, t: float, ctx: ProblemContext,
                     alpha_fallback=None) -> ControlDecision:
    """Smooth feedback control at one point, canonical units."""
    x, m, lam, lam_m = unpack(z)
    b_mat = _mee_b(x)
    p_ava = float(np.real(_available_power_w(ctx, x, t)))
    return smooth_control(
        ctx.table, ctx.t_end, ctx.c_end, p_ava, ctx.power.rho_c_reference_w,
        ctx.rho, b_mat, m, lam, lam_m, alpha_fallback=alpha_fallback)


def full_rhs(z, t: float, ctx: ProblemContext) -> np.ndarray:
    """d/dt of the 14-vector z: physical smoothed dynamics plus costate rates."""
    x, m, lam, lam_m = unpack(z)
    a_vec = _mee_a(x)
    b_mat = _mee_b(x)

    decision = evaluate_control(z, t, ctx)
    accel = np.zeros(3)
    if not decision.degenerate_primer:
        accel = (decision.thrust / m) * decision.alpha_hat
    if len(ctx.bodies):
        planet_rs = _planet_positions_au(ctx, t)
        mu_b = _mu_bodies_canonical(ctx)
        accel = accel + _a_sb_lvlh(x, planet_rs, mu_b)

    x_dot = a_vec + b_mat @ accel
    rates = costate_rates(z, t, ctx)
    return np.concatenate([x_dot, [decision.mdot], rates])
