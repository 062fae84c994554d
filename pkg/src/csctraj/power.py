"""Solar-array output and power available to the engines.

P_ava(r, tau) = psi(tau) * phi(r) * p0_bol - p_bus, with phi the heliocentric
distance factor and psi the array degradation factor. Negative available power
is returned as-is; downstream activation weights already handle the
"not enough power at all" regime, and clamping here would flatten their
gradients.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PowerModel:
    p0_bol_kw: float
    decay_rate_per_year: float = 0.0
    p_bus_kw: float = 0.0
    phi_coeffs: tuple[float, float, float, float, float] | None = None
    r_min_au: float = 0.8
    r_max_au: float = 2.0
    # fixed reference (watts) that normalizes activation-weight arguments;
    # 1.0 selects the raw-watt convention
    rho_c_reference_w: float = 1000.0

    def __post_init__(self):
        if self.p0_bol_kw <= 0.0:
            raise ValueError(f"p0_bol_kw must be positive, got {self.p0_bol_kw}")
        if not (0.0 <= self.decay_rate_per_year < 1.0):
            raise ValueError(f"decay_rate_per_year must be in [0,1), got {self.decay_rate_per_year}")
        if self.p_bus_kw < 0.0:
            raise ValueError(f"p_bus_kw must be nonnegative, got {self.p_bus_kw}")
        if not (0.0 < self.r_min_au < self.r_max_au):
            raise ValueError(f"need 0 < r_min < r_max, got [{self.r_min_au}, {self.r_max_au}]")
        if self.phi_coeffs is not None:
            object.__setattr__(self, "phi_coeffs", tuple(float(c) for c in self.phi_coeffs))


def distance_factor(model: PowerModel, r_au: float) -> float:
    """phi(r): inverse-square by default, optionally scaled by a rational fit.

    With coefficients (A1..A5): phi = (A1 + A2/r + A3/r^2 + A4*r + A5*r^2)/r^2.
    """
    if r_au <= 0.0:
        raise ValueError(f"heliocentric distance must be positive, got {r_au}")
    inv_r2 = 1.0 / (r_au * r_au)
    if model.phi_coeffs is None:
        return inv_r2
    a1, a2, a3, a4, a5 = model.phi_coeffs
    bracket = a1 + a2 / r_au + a3 / (r_au * r_au) + a4 * r_au + a5 * r_au * r_au
    return inv_r2 * bracket


def degradation_factor(model: PowerModel, tau_years: float) -> float:
    """psi(tau) = (1 - sigma)^tau, in (0, 1]."""
    if tau_years < 0.0:
        raise ValueError(f"elapsed time must be nonnegative, got {tau_years}")
    return (1.0 - model.decay_rate_per_year) ** tau_years


def available_power(model: PowerModel, r_au: float, tau_years: float) -> float:
    """Power left for the engines in kilowatts; may be negative."""
    return (
        degradation_factor(model, tau_years) * distance_factor(model, r_au) * model.p0_bol_kw
        - model.p_bus_kw
    )
