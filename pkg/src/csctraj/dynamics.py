"""Orbital state representations, equations of motion, and ephemeris.

States are modified equinoctial elements x = [p, f, g, h, k, l]; the element
rates split into a two-body part A(x) and a control-influence matrix B(x)
mapping LVLH accelerations [radial, transverse, normal]. The true longitude l
is kept unwrapped (monotone along prograde motion) so derivatives with respect
to it stay branch-cut free across revolutions.

Planet positions come from approximate mean Keplerian elements with linear
centennial rates (bundled data file), good to a few 1e-3 AU over 1800-2050,
which is adequate for third-body perturbation work at this fidelity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

AU_KM = 149597870.7
MU_SUN_KM3_S2 = 1.32712440018e11
DAY_S = 86400.0
J2000_JD = 2451545.0

# canonical time unit: one radian of a circular 1 AU orbit
TU_S = math.sqrt(AU_KM**3 / MU_SUN_KM3_S2)
VU_KM_S = AU_KM / TU_S
ACC_M_S2 = AU_KM * 1000.0 / TU_S**2

_KEPLER_TOL_RAD = 1e-12
_KEPLER_MAX_ITER = 50


@dataclass(frozen=True)
class CartesianState:
    r_km: tuple[float, float, float]
    v_km_s: tuple[float, float, float]
    epoch_jd: float = J2000_JD

    def __post_init__(self):
        object.__setattr__(self, "r_km", tuple(float(c) for c in self.r_km))
        object.__setattr__(self, "v_km_s", tuple(float(c) for c in self.v_km_s))
        if np.linalg.norm(self.r_km) <= 0.0:
            raise ValueError("position vector must be nonzero")


@dataclass(frozen=True)
class MeeState:
    p: float
    f: float
    g: float
    h: float
    k: float
    l: float

    def __post_init__(self):
        if self.p <= 0.0:
            raise ValueError(f"semi-latus rectum must be positive, got {self.p}")
        if 1.0 + self.f * math.cos(self.l) + self.g * math.sin(self.l) <= 0.0:
            raise ValueError("degenerate conic: 1 + f cos l + g sin l <= 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.f, self.g, self.h, self.k, self.l])

    @staticmethod
    def from_array(x) -> "MeeState":
        return MeeState(*(float(v) for v in x))


@dataclass(frozen=True)
class CanonicalUnits:
    """Length in AU, mu_sun = 1, mass in units of a reference mass."""

    mass_ref_kg: float
    lu_km: float = AU_KM
    tu_s: float = TU_S

    @property
    def vu_km_s(self) -> float:
        return self.lu_km / self.tu_s

    def thrust_to_canonical(self, thrust_mn: float) -> float:
        return thrust_mn * 1e-3 / (self.mass_ref_kg * ACC_M_S2)

    def mdot_to_canonical(self, mdot_mg_s: float) -> float:
        return mdot_mg_s * 1e-6 * self.tu_s / self.mass_ref_kg

    def c_to_canonical(self, c_m_s: float) -> float:
        return c_m_s / (self.vu_km_s * 1000.0)

    def days_to_canonical(self, days: float) -> float:
        return days * DAY_S / self.tu_s


def mee_from_rv(r, v, mu) -> np.ndarray:
    """MEE vector from position/velocity in any consistent unit system."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    h_vec = np.cross(r, v)
    h_mag = np.linalg.norm(h_vec)
    if h_mag <= 0.0:
        raise ValueError("rectilinear orbit: angular momentum is zero")
    h_hat = h_vec / h_mag
    denom = 1.0 + h_hat[2]
    if denom < 1e-12:
        raise ValueError(
            "retrograde equatorial orbit: the (h, k) projection is singular; "
            "use a retrograde element set for such orbits"
        )
    p = h_mag**2 / mu
    hh = -h_hat[1] / denom
    kk = h_hat[0] / denom

    e_vec = np.cross(v, h_vec) / mu - r / np.linalg.norm(r)

    s2 = 1.0 + hh * hh + kk * kk
    f_hat = np.array([1.0 - kk * kk + hh * hh, 2.0 * hh * kk, -2.0 * kk]) / s2
    g_hat = np.array([2.0 * hh * kk, 1.0 + kk * kk - hh * hh, 2.0 * hh]) / s2

    ff = float(e_vec @ f_hat)
    gg = float(e_vec @ g_hat)
    l = math.atan2(float(r @ g_hat), float(r @ f_hat)) % (2.0 * math.pi)
    return np.array([p, ff, gg, hh, kk, l])


def rv_from_mee(x, mu) -> tuple[np.ndarray, np.ndarray]:
    """Position/velocity from an MEE vector, inverse of mee_from_rv."""
    p, f, g, h, k, l = (float(c) for c in x)
    if p <= 0.0:
        raise ValueError(f"semi-latus rectum must be positive, got {p}")
    cl, sl = math.cos(l), math.sin(l)
    alpha2 = h * h - k * k
    s2 = 1.0 + h * h + k * k
    w = 1.0 + f * cl + g * sl
    if w <= 0.0:
        raise ValueError("degenerate conic: 1 + f cos l + g sin l <= 0")
    r_mag = p / w
    sqrt_mu_p = math.sqrt(mu / p)

    r_vec = np.array([
        (r_mag / s2) * (cl + alpha2 * cl + 2.0 * h * k * sl),
        (r_mag / s2) * (sl - alpha2 * sl + 2.0 * h * k * cl),
        (2.0 * r_mag / s2) * (h * sl - k * cl),
    ])
    v_vec = np.array([
        -(sqrt_mu_p / s2) * (sl + alpha2 * sl - 2.0 * h * k * cl + g - 2.0 * f * h * k + alpha2 * g),
        -(sqrt_mu_p / s2) * (-cl + alpha2 * cl + 2.0 * h * k * sl - f + 2.0 * g * h * k + alpha2 * f),
        (2.0 * sqrt_mu_p / s2) * (h * cl + k * sl + f * h + g * k),
    ])
    return r_vec, v_vec


def mee_from_cartesian(state: CartesianState, mu_km3_s2: float = MU_SUN_KM3_S2) -> MeeState:
    x = mee_from_rv(state.r_km, state.v_km_s, mu_km3_s2)
    return MeeState.from_array(x)


def cartesian_from_mee(x: MeeState, mu_km3_s2: float = MU_SUN_KM3_S2,
                       epoch_jd: float = J2000_JD) -> CartesianState:
    r, v = rv_from_mee(x.as_array(), mu_km3_s2)
    return CartesianState(r_km=tuple(r), v_km_s=tuple(v), epoch_jd=epoch_jd)


def two_body_term(x, mu: float = 1.0) -> np.ndarray:
    """A(x): only the true-longitude rate is nonzero."""
    p, f, g, _, _, l = _as_components(x)
    w = 1.0 + f * math.cos(l) + g * math.sin(l)
    a = np.zeros(6)
    a[5] = math.sqrt(mu * p) * (w / p) ** 2
    return a


def control_influence(x, mu: float = 1.0) -> np.ndarray:
    """B(x): 6x3 map from LVLH acceleration [a_r, a_t, a_n] to element rates."""
    p, f, g, h, k, l = _as_components(x)
    cl, sl = math.cos(l), math.sin(l)
    w = 1.0 + f * cl + g * sl
    s2 = 1.0 + h * h + k * k
    root = math.sqrt(p / mu)
    hk_term = h * sl - k * cl

    b = np.zeros((6, 3))
    b[0, 1] = 2.0 * p / w
    b[1, 0] = sl
    b[1, 1] = ((w + 1.0) * cl + f) / w
    b[1, 2] = -g * hk_term / w
    b[2, 0] = -cl
    b[2, 1] = ((w + 1.0) * sl + g) / w
    b[2, 2] = f * hk_term / w
    b[3, 2] = s2 * cl / (2.0 * w)
    b[4, 2] = s2 * sl / (2.0 * w)
    b[5, 2] = hk_term / w
    return root * b


def _as_components(x):
    if isinstance(x, MeeState):
        return x.p, x.f, x.g, x.h, x.k, x.l
    p, f, g, h, k, l = (float(c) for c in x)
    return p, f, g, h, k, l


# --- ephemeris -------------------------------------------------------------

@dataclass(frozen=True)
class BodyElements:
    """Mean Keplerian elements at J2000 plus linear rates per Julian century."""

    name: str
    mu_km3_s2: float
    a_au: float
    a_dot: float
    e: float
    e_dot: float
    i_deg: float
    i_dot: float
    L_deg: float
    L_dot: float
    varpi_deg: float
    varpi_dot: float
    Omega_deg: float
    Omega_dot: float

    def __post_init__(self):
        if not (0.0 <= self.e < 1.0):
            raise ValueError(f"{self.name}: eccentricity {self.e} outside [0,1)")
        if self.a_au <= 0.0:
            raise ValueError(f"{self.name}: semi-major axis must be positive")


@dataclass(frozen=True)
class Ephemeris:
    bodies: tuple[BodyElements, ...]

    def __getitem__(self, name: str) -> BodyElements:
        for b in self.bodies:
            if b.name == name:
                return b
        raise KeyError(f"body {name!r} not in ephemeris {[b.name for b in self.bodies]}")

    def names(self) -> list[str]:
        return [b.name for b in self.bodies]


def load_ephemeris(source=None, bodies=None) -> Ephemeris:
    """Load mean-element tables; defaults to the bundled eight planets.

    Args:
        source: optional path to a JSON document replacing the bundled one.
        bodies: optional name subset, preserving the requested order.
    """
    if source is None:
        text = resources.files("csctraj.data").joinpath("planets.json").read_text()
        doc = json.loads(text)
    elif isinstance(source, (str, Path)):
        with open(source) as fh:
            doc = json.load(fh)
    else:
        doc = source
    recs = {rec["name"]: rec for rec in doc["bodies"]}
    names = list(recs) if bodies is None else list(bodies)
    loaded = []
    for name in names:
        if name not in recs:
            raise KeyError(f"body {name!r} not in ephemeris source")
        rec = dict(recs[name])
        loaded.append(BodyElements(**rec))
    return Ephemeris(bodies=tuple(loaded))


def solve_kepler(mean_anomaly_rad: float, e: float) -> float:
    """Eccentric anomaly from Kepler's equation by Newton iteration."""
    m = math.remainder(mean_anomaly_rad, 2.0 * math.pi)
    ecc_anom = m + e * math.sin(m)
    for _ in range(_KEPLER_MAX_ITER):
        delta = (ecc_anom - e * math.sin(ecc_anom) - m) / (1.0 - e * math.cos(ecc_anom))
        ecc_anom -= delta
        if abs(delta) < _KEPLER_TOL_RAD:
            return ecc_anom
    raise RuntimeError(
        f"Kepler iteration failed to reach {_KEPLER_TOL_RAD} rad in "
        f"{_KEPLER_MAX_ITER} iterations (M={mean_anomaly_rad}, e={e})"
    )


def planet_position(ephemeris: Ephemeris, body: str, epoch_jd: float) -> np.ndarray:
    """Heliocentric ecliptic-J2000 position in km from propagated mean elements."""
    el = ephemeris[body]
    t_cent = (epoch_jd - J2000_JD) / 36525.0

    a = (el.a_au + el.a_dot * t_cent) * AU_KM
    e = el.e + el.e_dot * t_cent
    inc = math.radians(el.i_deg + el.i_dot * t_cent)
    big_l = math.radians(el.L_deg + el.L_dot * t_cent)
    varpi = math.radians(el.varpi_deg + el.varpi_dot * t_cent)
    omega_node = math.radians(el.Omega_deg + el.Omega_dot * t_cent)

    arg_peri = varpi - omega_node
    mean_anom = big_l - varpi
    ecc_anom = solve_kepler(mean_anom, e)

    x_orb = a * (math.cos(ecc_anom) - e)
    y_orb = a * math.sqrt(1.0 - e * e) * math.sin(ecc_anom)

    cw, sw = math.cos(arg_peri), math.sin(arg_peri)
    co, so = math.cos(omega_node), math.sin(omega_node)
    ci, si = math.cos(inc), math.sin(inc)
    return np.array([
        (cw * co - sw * so * ci) * x_orb + (-sw * co - cw * so * ci) * y_orb,
        (cw * so + sw * co * ci) * x_orb + (-sw * so + cw * co * ci) * y_orb,
        (sw * si) * x_orb + (cw * si) * y_orb,
    ])


def secondary_accel(ephemeris: Ephemeris, r_sc_km, epoch_jd: float,
                    bodies=None) -> np.ndarray:
    """Third-body perturbing acceleration in km/s^2, indirect term included."""
    r_sc = np.asarray(r_sc_km, dtype=float)
    names = ephemeris.names() if bodies is None else list(bodies)
    acc = np.zeros(3)
    for name in names:
        r_b = planet_position(ephemeris, name, epoch_jd)
        d = r_b - r_sc
        d_mag = np.linalg.norm(d)
        if d_mag < 1.0:
            raise ValueError(f"spacecraft within 1 km of {name}: third-body model singular")
        mu_b = ephemeris[name].mu_km3_s2
        acc += mu_b * (d / d_mag**3 - r_b / np.linalg.norm(r_b) ** 3)
    return acc
