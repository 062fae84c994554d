"""Engine performance surrogate models.

Each solar-electric engine is described by two quartic polynomials fitted over
the admissible input-power range: thrust in millinewtons and mass flow rate in
milligrams per second, both as functions of input power in kilowatts. Derived
quantities (exhaust velocity, specific impulse, efficiency) follow from the
two polynomials. No extrapolation is performed outside [p_min, p_max]; the
decision to run an engine at zero power belongs to the control layer, not
here.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

G0_M_S2 = 9.80665

_REQUIRED_FIELDS = ("id", "name", "thrust_coeffs", "mdot_coeffs", "p_min_kw", "p_max_kw")


@dataclass(frozen=True)
class EngineSpec:
    """One engine type: quartic surrogate coefficients plus power limits.

    Coefficient order is highest power first: value = a*P^4 + b*P^3 + c*P^2
    + d*P + e with P in kilowatts. Thrust coefficients give millinewtons,
    mass-flow coefficients give milligrams/second.
    """

    id: int
    name: str
    thrust_coeffs: tuple[float, float, float, float, float]
    mdot_coeffs: tuple[float, float, float, float, float]
    p_min_kw: float
    p_max_kw: float

    def __post_init__(self):
        if not (0.0 < self.p_min_kw < self.p_max_kw):
            raise ValueError(
                f"engine {self.id} ({self.name}): power limits must satisfy "
                f"0 < p_min < p_max, got [{self.p_min_kw}, {self.p_max_kw}]"
            )
        if len(self.thrust_coeffs) != 5 or len(self.mdot_coeffs) != 5:
            raise ValueError(f"engine {self.id}: expected 5 coefficients per polynomial")
        object.__setattr__(self, "thrust_coeffs", tuple(float(c) for c in self.thrust_coeffs))
        object.__setattr__(self, "mdot_coeffs", tuple(float(c) for c in self.mdot_coeffs))


def _check_power_range(engine: EngineSpec, power_kw: float) -> None:
    if power_kw < engine.p_min_kw:
        raise ValueError(
            f"engine {engine.id} ({engine.name}): P = {power_kw} kW below "
            f"p_min = {engine.p_min_kw} kW"
        )
    if power_kw > engine.p_max_kw:
        raise ValueError(
            f"engine {engine.id} ({engine.name}): P = {power_kw} kW above "
            f"p_max = {engine.p_max_kw} kW"
        )


def _horner(coeffs, x: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def thrust_at_power(engine: EngineSpec, power_kw: float) -> float:
    """Thrust in millinewtons at the given input power in kilowatts.

    Raises:
        ValueError: if power_kw lies outside [p_min_kw, p_max_kw].
    """
    _check_power_range(engine, power_kw)
    return _horner(engine.thrust_coeffs, power_kw)


def mass_flow_at_power(engine: EngineSpec, power_kw: float) -> float:
    """Mass flow rate in milligrams/second at the given input power."""
    _check_power_range(engine, power_kw)
    return _horner(engine.mdot_coeffs, power_kw)


def exhaust_velocity_at_power(engine: EngineSpec, power_kw: float) -> float:
    """Effective exhaust velocity c = T/mdot in meters/second.

    mN over mg/s is km/s, hence the factor 1000.

    Raises:
        ValueError: for out-of-range power, or a degenerate model where the
            mass-flow polynomial vanishes.
    """
    thrust_mn = thrust_at_power(engine, power_kw)
    mdot_mg_s = mass_flow_at_power(engine, power_kw)
    if mdot_mg_s <= 0.0:
        raise ValueError(
            f"engine {engine.id} ({engine.name}): nonpositive mass flow "
            f"{mdot_mg_s} mg/s at P = {power_kw} kW, exhaust velocity undefined"
        )
    return 1000.0 * thrust_mn / mdot_mg_s


def isp_at_power(engine: EngineSpec, power_kw: float) -> float:
    """Specific impulse in seconds."""
    return exhaust_velocity_at_power(engine, power_kw) / G0_M_S2


def efficiency_at_power(engine: EngineSpec, power_kw: float) -> float:
    """Jet efficiency eta = T*c/(2*P), dimensionless.

    With T in mN, c in m/s and P in kW the conversion factor is 2e6. Values
    outside (0, 1) indicate an inconsistent surrogate and raise a warning,
    not an error.
    """
    thrust_mn = thrust_at_power(engine, power_kw)
    c_m_s = exhaust_velocity_at_power(engine, power_kw)
    eta = thrust_mn * c_m_s / (2.0e6 * power_kw)
    if not (0.0 < eta < 1.0):
        warnings.warn(
            f"engine {engine.id} ({engine.name}): efficiency {eta:.4f} outside (0,1) "
            f"at P = {power_kw} kW",
            stacklevel=2,
        )
    return eta


@dataclass(frozen=True)
class EngineCatalog:
    """Ordered collection of engine types keyed by id."""

    engines: dict[int, EngineSpec] = field(default_factory=dict)

    def __getitem__(self, engine_id: int) -> EngineSpec:
        try:
            return self.engines[engine_id]
        except KeyError:
            raise KeyError(f"engine id {engine_id} not in catalog {sorted(self.engines)}") from None

    def __iter__(self):
        return iter(self.engines.values())

    def __len__(self) -> int:
        return len(self.engines)


def _default_records() -> dict[int, dict]:
    text = resources.files("csctraj.data").joinpath("engines.json").read_text()
    return {rec["id"]: rec for rec in json.loads(text)["engines"]}


def load_catalog(source=None) -> EngineCatalog:
    """Build an engine catalog, merging an optional source over the defaults.

    Args:
        source: None for the built-in six-engine catalog; a path to a JSON
            document or an already-parsed dict with an "engines" array.
            Records whose id matches a built-in engine override it field by
            field; records with new ids must be complete.

    Raises:
        ValueError: duplicate ids in the source, incomplete new records, or
            invalid power limits.
    """
    records = _default_records()

    if source is not None:
        if isinstance(source, (str, Path)):
            with open(source) as fh:
                doc = json.load(fh)
        else:
            doc = source
        seen = set()
        for rec in doc.get("engines", []):
            if "id" not in rec:
                raise ValueError("engine record without an 'id' field")
            eid = rec["id"]
            if eid in seen:
                raise ValueError(f"duplicate engine id {eid} in source")
            seen.add(eid)
            if eid in records:
                merged = dict(records[eid])
                merged.update(rec)
                records[eid] = merged
            else:
                missing = [k for k in _REQUIRED_FIELDS if k not in rec]
                if missing:
                    raise ValueError(f"engine id {eid}: missing fields {missing}")
                records[eid] = rec

    engines = {}
    for eid in sorted(records):
        rec = records[eid]
        engines[eid] = EngineSpec(
            id=rec["id"],
            name=rec["name"],
            thrust_coeffs=tuple(rec["thrust_coeffs"]),
            mdot_coeffs=tuple(rec["mdot_coeffs"]),
            p_min_kw=rec["p_min_kw"],
            p_max_kw=rec["p_max_kw"],
        )
    return EngineCatalog(engines=engines)
