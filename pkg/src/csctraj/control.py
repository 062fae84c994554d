"""Composite smooth control: the two-level tanh relaxation of the discrete
engine logic.

Level one (rho_c) smooths the mode-engagement constraints: each operation mode
carries a multiplicative activation weight built from its power interval, so
the available power selects modes smoothly. Level two (rho_b) smooths the
on/off optimality decision of each thrust channel through its switching
function. Thrust direction is the primer vector. Everything here is a pure
function of (state-derived quantities, costates, smoothing parameters); no
integration, no ephemeris.

Sign conventions (re-derived, not copied): minimizing the Hamiltonian of the
final-mass-maximization problem gives switching functions
S = |lambda^T B|/m + lambda_m/c with thrust favored when S > 0, steering
alpha_hat = -(lambda^T B)^T/|lambda^T B|, and lambda_m(t_f) = -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modes import ModeTable

# below this, the primer direction is numerically undefined
PRIMER_NORM_FLOOR = 1e-14


class PrimerUndefinedError(ValueError):
    """|lambda^T B| too small to define a thrust direction."""


@dataclass(frozen=True)
class SmoothingParams:
    rho_b: float
    rho_c: float

    def __post_init__(self):
        if self.rho_b <= 0.0 or self.rho_c <= 0.0:
            raise ValueError(f"smoothing parameters must be positive, got {self}")


def activation_factor(gap_w: float, rho_c: float, power_ref_w: float = 1000.0) -> float:
    """One half-step factor 0.5*[1 - tanh(gap/(ref*rho_c))].

    gap_w > 0 means the constraint is violated (factor -> 0), gap_w < 0
    satisfied (factor -> 1), gap_w = 0 gives exactly 0.5.
    """
    return 0.5 * (1.0 - math.tanh(gap_w / (power_ref_w * rho_c)))


def activation_weights(table: ModeTable, p_ava_w: float, rho_c: float,
                       power_ref_w: float = 1000.0) -> np.ndarray:
    """Per-mode weights w in [0,1]; near-one-hot for small rho_c.

    Mode i is bounded below by its own p_used and above by the previous
    (higher-power) mode's p_used; the first mode has no upper factor.
    """
    if rho_c <= 0.0:
        raise ValueError(f"rho_c must be positive, got {rho_c}")
    p_used = table.p_used()
    w = np.empty(len(p_used))
    for i, lower in enumerate(p_used):
        wi = activation_factor(lower - p_ava_w, rho_c, power_ref_w)
        if i > 0:
            wi *= activation_factor(p_ava_w - p_used[i - 1], rho_c, power_ref_w)
        w[i] = wi
    return w


def switching_function(lam_mee, lam_m: float, b_matrix, m: float, c: float) -> float:
    """S = |lambda^T B|/m + lambda_m/c, all in consistent (canonical) units."""
    if m <= 0.0:
        raise ValueError(f"mass must be positive, got {m}")
    lam_b = np.asarray(lam_mee) @ np.asarray(b_matrix)
    return float(np.linalg.norm(lam_b)) / m + lam_m / c


def setting_activation(s_value: float, rho_b: float) -> float:
    """zeta = 0.5*[1 + tanh(S/rho_b)], in (0,1), monotone, zeta(0)=0.5."""
    if rho_b <= 0.0:
        raise ValueError(f"rho_b must be positive, got {rho_b}")
    return 0.5 * (1.0 + math.tanh(s_value / rho_b))


def smooth_counts(table: ModeTable, w) -> tuple[float, float]:
    """Same-type smooth engine counts (N at max, N at min) = w . count columns."""
    w = np.asarray(w)
    if w.shape != (table.n_modes,):
        raise ValueError(f"weight vector length {w.shape} != n_modes {table.n_modes}")
    n_max = float(w @ np.array([m.n_at_pmax for m in table.modes], dtype=float))
    n_min = float(w @ np.array([m.n_at_pmin for m in table.modes], dtype=float))
    return n_max, n_min


def channel_gammas(table: ModeTable, w) -> np.ndarray:
    """Per-channel engagement gamma_k = sum_i w_i * (units of channel k in mode i).

    For same-type tables the two channels carry the smooth counts; for mixed
    tables each (engine slot, setting) channel gets a value in [0, 1].
    """
    w = np.asarray(w)
    gm = np.asarray(table.gamma_rows)
    return w @ gm


def composite_thrust_mdot_same(counts, zetas, endpoints) -> tuple[float, float]:
    """Smoothed cluster thrust and (signed, negative) mass flow, same-type.

    Args:
        counts: (N at max, N at min) smooth counts.
        zetas: (zeta_max, zeta_min) switching activations.
        endpoints: ((T_max, c_max), (T_min, c_min)) in any consistent units.

    Returns:
        (thrust, mdot) with mdot <= 0; thrust/|mdot| equals the blended
        exhaust velocity.
    """
    thrust = 0.0
    mdot = 0.0
    for count, zeta, (t_end, c_end) in zip(counts, zetas, endpoints):
        contrib = count * zeta * t_end
        thrust += contrib
        mdot -= contrib / c_end
    return thrust, mdot


def composite_thrust_mdot_mixed(table: ModeTable, w, zetas, endpoints) -> tuple[float, float]:
    """Smoothed cluster thrust and signed mass flow for a mixed table.

    zetas and endpoints are per channel, in table.channels order.
    """
    gammas = channel_gammas(table, w)
    if len(zetas) != len(gammas) or len(endpoints) != len(gammas):
        raise ValueError(
            f"need one zeta and endpoint per channel ({len(gammas)}), "
            f"got {len(zetas)} and {len(endpoints)}")
    thrust = 0.0
    mdot = 0.0
    for gamma, zeta, (t_end, c_end) in zip(gammas, zetas, endpoints):
        contrib = gamma * zeta * t_end
        thrust += contrib
        mdot -= contrib / c_end
    return thrust, mdot


def primer_direction(lam_mee, b_matrix) -> np.ndarray:
    """alpha_hat = -(lambda^T B)^T / |lambda^T B|, the H-minimizing direction.

    Raises:
        PrimerUndefinedError: when |lambda^T B| < PRIMER_NORM_FLOOR. Callers
            hold the previous direction; thrust there is negligible anyway.
    """
    d = -(np.asarray(lam_mee) @ np.asarray(b_matrix))
    norm = float(np.linalg.norm(d))
    if norm < PRIMER_NORM_FLOOR:
        raise PrimerUndefinedError(
            f"|lambda^T B| = {norm:.3e} below {PRIMER_NORM_FLOOR}; thrust direction undefined")
    return d / norm


@dataclass(frozen=True)
class ControlDecision:
    """Full smooth-control evaluation at one (state, costate) point."""

    alpha_hat: np.ndarray | None
    weights: np.ndarray
    gammas: np.ndarray
    s_values: np.ndarray
    zetas: np.ndarray
    thrust: float
    mdot: float
    degenerate_primer: bool

    @property
    def engaged_mode(self) -> int:
        """1-based index of the dominant mode."""
        return int(np.argmax(self.weights)) + 1

    @property
    def w_max(self) -> float:
        return float(np.max(self.weights))


def smooth_control(table: ModeTable, t_end, c_end, p_ava_w: float, power_ref_w: float,
                   rho: SmoothingParams, b_matrix, m: float, lam_mee, lam_m: float,
                   alpha_fallback=None) -> ControlDecision:
    """Evaluate the complete smooth feedback law at one point.

    t_end/c_end are per-channel endpoint thrust and exhaust velocity in the
    caller's unit system (canonical inside the solver); outputs share it.
    On a degenerate primer direction the decision is a coast: zero thrust and
    zero mass flow, with alpha_fallback (or None) recorded.
    """
    w = activation_weights(table, p_ava_w, rho.rho_c, power_ref_w)
    gammas = channel_gammas(table, w)

    lam_b = np.asarray(lam_mee) @ np.asarray(b_matrix)
    lam_b_norm = float(np.linalg.norm(lam_b))
    s_values = np.array([lam_b_norm / m + lam_m / c for c in c_end])
    zetas = np.array([setting_activation(s, rho.rho_b) for s in s_values])

    if lam_b_norm < PRIMER_NORM_FLOOR:
        return ControlDecision(
            alpha_hat=alpha_fallback, weights=w, gammas=gammas, s_values=s_values,
            zetas=zetas, thrust=0.0, mdot=0.0, degenerate_primer=True)

    alpha_hat = -lam_b / lam_b_norm
    contrib = gammas * zetas * np.asarray(t_end)
    thrust = float(np.sum(contrib))
    mdot = -float(np.sum(contrib / np.asarray(c_end)))
    return ControlDecision(
        alpha_hat=alpha_hat, weights=w, gammas=gammas, s_values=s_values,
        zetas=zetas, thrust=thrust, mdot=mdot, degenerate_primer=False)
