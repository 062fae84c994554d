"""JSON problem configuration: parsing, validation, and problem assembly.

One JSON document describes a complete rendezvous problem. Sections:

  name            free-form label used in output files
  spacecraft      {"m0_kg": ...}
  power           {"p0_bol_kw", "p_bus_kw", "decay_rate_per_year",
                   "phi_coeffs" (null for inverse-square), "r_min_au",
                   "r_max_au", "rho_c_reference_w"} - all but p0_bol_kw
                  optional
  cluster         {"kind": "same_type"|"mixed", "engine_ids": [...]}
  cap_w           optional explicit power cap; omitted means the rule
                  p0 * phi(r_min)
  boundary        {"epoch": "YYYY-MM-DD" or Julian date, "r0_km", "v0_km_s",
                   "rf_km", "vf_km_s", "tof_days", "n_rev"}
  perturbations   optional {"bodies": ["earth", ...]}
  solver          optional overrides for the continuation defaults
  engines         optional list of engine records merged over the bundled
                  catalog (same schema as the bundled data file)

Dates are accepted as calendar strings (UTC midnight) or Julian dates and are
stored as Julian dates. Errors raise ConfigError naming the offending field.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .adjoint import ProblemContext, make_context
from .control import SmoothingParams
from .dynamics import AU_KM, CanonicalUnits, load_ephemeris, mee_from_rv
from .engines import EngineCatalog, load_catalog
from .modes import ClusterSpec, ModeTable, build_table, default_cap
from .power import PowerModel
from .solver import ShootingSetup, SolverParams, make_setup


class ConfigError(ValueError):
    """A configuration document failed to parse or validate."""


@dataclass(frozen=True)
class BoundaryConfig:
    epoch_jd: float
    r0_km: tuple[float, float, float]
    v0_km_s: tuple[float, float, float]
    rf_km: tuple[float, float, float]
    vf_km_s: tuple[float, float, float]
    tof_days: float
    n_rev: int = 0


@dataclass(frozen=True)
class ProblemConfig:
    name: str
    m0_kg: float
    power: PowerModel
    cluster: ClusterSpec
    boundary: BoundaryConfig
    cap_w: float | None = None
    bodies: tuple[str, ...] = ()
    solver: SolverParams = field(default_factory=SolverParams)
    engine_overrides: dict | None = None
    raw: dict | None = None


def parse_epoch(value) -> float:
    """Calendar date string (UTC midnight) or Julian date -> Julian date."""
    if isinstance(value, (int, float)):
        jd = float(value)
        if not (2.0e6 < jd < 3.0e6):
            raise ConfigError(f"boundary.epoch: implausible Julian date {jd}")
        return jd
    if isinstance(value, str):
        try:
            date = datetime.date.fromisoformat(value)
        except ValueError as exc:
            raise ConfigError(f"boundary.epoch: {exc}") from exc
        return date.toordinal() + 1721424.5
    raise ConfigError(f"boundary.epoch: expected date string or number, got {value!r}")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return section[key]


def _vector3(section: dict, key: str, where: str) -> tuple[float, float, float]:
    value = _require(section, key, where)
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(
            f"{where}.{key}: expected 3 components, got {value!r}")
    try:
        return tuple(float(c) for c in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}.{key}: non-numeric component: {exc}") from exc


def _number(section: dict, key: str, where: str, default=None,
            positive: bool = False) -> float:
    if key not in section:
        if default is None:
            raise ConfigError(f"{where}: missing required field '{key}'")
        return default
    try:
        value = float(section[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}.{key}: expected a number: {exc}") from exc
    if positive and value <= 0.0:
        raise ConfigError(f"{where}.{key}: must be positive, got {value}")
    return value


def parse_config(doc: dict, origin: str = "<config>") -> ProblemConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{origin}: top level must be a JSON object")
    name = doc.get("name", "unnamed")

    sc = doc.get("spacecraft")
    if not isinstance(sc, dict):
        raise ConfigError(f"{origin}: missing 'spacecraft' section")
    m0_kg = _number(sc, "m0_kg", "spacecraft", positive=True)

    pw = doc.get("power")
    if not isinstance(pw, dict):
        raise ConfigError(f"{origin}: missing 'power' section")
    phi = pw.get("phi_coeffs")
    if phi is not None:
        if not isinstance(phi, (list, tuple)) or len(phi) != 5:
            raise ConfigError("power.phi_coeffs: expected 5 coefficients or null")
        phi = tuple(float(c) for c in phi)
    try:
        power = PowerModel(
            p0_bol_kw=_number(pw, "p0_bol_kw", "power", positive=True),
            decay_rate_per_year=_number(pw, "decay_rate_per_year", "power", 0.0),
            p_bus_kw=_number(pw, "p_bus_kw", "power", 0.0),
            phi_coeffs=phi,
            r_min_au=_number(pw, "r_min_au", "power", 0.8, positive=True),
            r_max_au=_number(pw, "r_max_au", "power", 2.0, positive=True),
            rho_c_reference_w=_number(pw, "rho_c_reference_w", "power", 1000.0,
                                      positive=True))
    except ValueError as exc:
        raise ConfigError(f"power: {exc}") from exc

    cl = doc.get("cluster")
    if not isinstance(cl, dict):
        raise ConfigError(f"{origin}: missing 'cluster' section")
    kind = _require(cl, "kind", "cluster")
    ids = _require(cl, "engine_ids", "cluster")
    if not isinstance(ids, (list, tuple)) or not ids:
        raise ConfigError("cluster.engine_ids: expected a non-empty list")
    try:
        cluster = ClusterSpec(kind=kind, engine_ids=tuple(int(i) for i in ids))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cluster: {exc}") from exc

    cap_w = None
    if doc.get("cap_w") is not None:
        cap_w = _number(doc, "cap_w", origin, positive=True)

    bd = doc.get("boundary")
    if not isinstance(bd, dict):
        raise ConfigError(f"{origin}: missing 'boundary' section")
    n_rev = bd.get("n_rev", 0)
    if not isinstance(n_rev, int) or n_rev < 0:
        raise ConfigError(f"boundary.n_rev: expected a non-negative integer, got {n_rev!r}")
    boundary = BoundaryConfig(
        epoch_jd=parse_epoch(_require(bd, "epoch", "boundary")),
        r0_km=_vector3(bd, "r0_km", "boundary"),
        v0_km_s=_vector3(bd, "v0_km_s", "boundary"),
        rf_km=_vector3(bd, "rf_km", "boundary"),
        vf_km_s=_vector3(bd, "vf_km_s", "boundary"),
        tof_days=_number(bd, "tof_days", "boundary", positive=True),
        n_rev=n_rev)

    bodies: tuple[str, ...] = ()
    pert = doc.get("perturbations")
    if pert is not None:
        if not isinstance(pert, dict):
            raise ConfigError("perturbations: expected an object")
        raw_bodies = pert.get("bodies", [])
        if not isinstance(raw_bodies, (list, tuple)):
            raise ConfigError("perturbations.bodies: expected a list of names")
        bodies = tuple(str(b) for b in raw_bodies)

    solver_params = SolverParams()
    sv = doc.get("solver")
    if sv is not None:
        if not isinstance(sv, dict):
            raise ConfigError("solver: expected an object")
        known = {f.name for f in dc_fields(SolverParams)}
        unknown = set(sv) - known
        if unknown:
            raise ConfigError(f"solver: unknown fields {sorted(unknown)}")
        try:
            solver_params = SolverParams(**sv)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver: {exc}") from exc

    overrides = None
    if doc.get("engines"):
        overrides = {"engines": doc["engines"]}

    return ProblemConfig(
        name=str(name), m0_kg=m0_kg, power=power, cluster=cluster,
        boundary=boundary, cap_w=cap_w, bodies=bodies, solver=solver_params,
        engine_overrides=overrides, raw=doc)


def load_config(path) -> ProblemConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
            f"{exc.msg}") from exc
    return parse_config(doc, origin=str(path))


@dataclass(frozen=True)
class Problem:
    """A fully assembled problem: catalog, table, context, and boundary."""

    config: ProblemConfig
    catalog: EngineCatalog
    table: ModeTable
    cap_w: float
    units: CanonicalUnits
    ctx: ProblemContext
    setup: ShootingSetup


def build_problem(cfg: ProblemConfig) -> Problem:
    """Assemble the solvable problem a configuration describes."""
    catalog = load_catalog(cfg.engine_overrides)
    cap_w = cfg.cap_w if cfg.cap_w is not None else default_cap(cfg.power)
    try:
        table = build_table(catalog, cfg.cluster, cap_w)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"cluster: {exc}") from exc

    units = CanonicalUnits(mass_ref_kg=cfg.m0_kg)
    ephemeris = None
    if cfg.bodies:
        ephemeris = load_ephemeris()
        for body in cfg.bodies:
            try:
                ephemeris[body]
            except KeyError as exc:
                raise ConfigError(f"perturbations.bodies: unknown body {body!r}") from exc

    rho0 = SmoothingParams(rho_b=cfg.solver.rho_start, rho_c=cfg.solver.rho_start)
    ctx = make_context(table, units, cfg.power, rho0,
                       epoch0_jd=cfg.boundary.epoch_jd,
                       ephemeris=ephemeris, bodies=cfg.bodies)

    vu_km_s = units.vu_km_s
    try:
        x0 = mee_from_rv(np.array(cfg.boundary.r0_km) / AU_KM,
                         np.array(cfg.boundary.v0_km_s) / vu_km_s, 1.0)
        xt = mee_from_rv(np.array(cfg.boundary.rf_km) / AU_KM,
                         np.array(cfg.boundary.vf_km_s) / vu_km_s, 1.0)
    except ValueError as exc:
        raise ConfigError(f"boundary: {exc}") from exc

    setup = make_setup(ctx, x0, xt, units.days_to_canonical(cfg.boundary.tof_days),
                       cfg.boundary.n_rev)
    return Problem(config=cfg, catalog=catalog, table=table, cap_w=cap_w,
                   units=units, ctx=ctx, setup=setup)
