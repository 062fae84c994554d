"""Discrete cluster operation modes.

A mode is one feasible assignment of every engine in the cluster to
{off, min, max}, identified by its aggregate input power p_used. Tables are
built once per problem (pre-processing), capped by the array output at the
inner heliocentric bound, filtered so p_used values are pairwise distinct
(keeping the fuel-cheapest assignment), and sorted by strictly decreasing
p_used.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .engines import EngineCatalog, EngineSpec, exhaust_velocity_at_power, mass_flow_at_power, thrust_at_power
from .power import PowerModel, distance_factor

OFF, MIN, MAX = "off", "min", "max"

# watt grouping tolerance for duplicate p_used detection
_DEDUP_TOL_W = 1e-6


def _kw_to_w(p_kw: float) -> float:
    # engine limits are tabulated in kW with at most 1e-3 kW resolution, so
    # rounding to micro-watts recovers the exact integer watt values
    return round(p_kw * 1000.0, 6)


@dataclass(frozen=True)
class ClusterSpec:
    """Ordered engine id list; kind is 'same_type' or 'mixed'."""

    kind: str
    engine_ids: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ("same_type", "mixed"):
            raise ValueError(f"cluster kind must be 'same_type' or 'mixed', got {self.kind!r}")
        if len(self.engine_ids) < 1:
            raise ValueError("cluster needs at least one engine")
        object.__setattr__(self, "engine_ids", tuple(int(i) for i in self.engine_ids))
        if self.kind == "same_type" and len(set(self.engine_ids)) != 1:
            raise ValueError(f"same_type cluster must repeat one id, got {self.engine_ids}")

    @property
    def n_engines(self) -> int:
        return len(self.engine_ids)


def same_type_cluster(engine_id: int, n_engines: int) -> ClusterSpec:
    return ClusterSpec(kind="same_type", engine_ids=(engine_id,) * n_engines)


def mixed_cluster(engine_ids) -> ClusterSpec:
    return ClusterSpec(kind="mixed", engine_ids=tuple(engine_ids))


@dataclass(frozen=True)
class OperationMode:
    """One cluster power configuration.

    settings holds one of off/min/max per engine slot; n_at_pmax/n_at_pmin
    are the aggregate counts (the full description for same-type clusters).
    mdot_full_mg_s is the mass flow if every assigned engine actually runs.
    """

    index: int
    p_used_w: float
    n_at_pmax: int
    n_at_pmin: int
    settings: tuple[str, ...]
    mdot_full_mg_s: float


@dataclass(frozen=True)
class Channel:
    """One (engine slot, power setting) thrust channel of the cluster."""

    slot: int
    engine_id: int
    setting: str
    power_w: float
    thrust_mn: float
    mdot_mg_s: float
    c_m_s: float


@dataclass(frozen=True)
class ModeTable:
    cluster: ClusterSpec
    modes: tuple[OperationMode, ...]
    cap_w: float
    channels: tuple[Channel, ...]
    # gamma_rows[i][k]: how many units of channel k mode i+1 engages
    gamma_rows: tuple[tuple[float, ...], ...]

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def p_used(self) -> list[float]:
        return [m.p_used_w for m in self.modes]


def default_cap(model: PowerModel) -> float:
    """Feasibility cap in watts: BOL array output at the inner radius bound.

    Degradation and bus load are deliberately excluded; this reproduces the
    published mode counts.
    """
    return model.p0_bol_kw * 1000.0 * distance_factor(model, model.r_min_au)


def _endpoint(engine: EngineSpec, setting: str):
    p_kw = engine.p_max_kw if setting == MAX else engine.p_min_kw
    return (
        _kw_to_w(p_kw),
        thrust_at_power(engine, p_kw),
        mass_flow_at_power(engine, p_kw),
        exhaust_velocity_at_power(engine, p_kw),
    )


def _same_type_channels(engine: EngineSpec) -> tuple[Channel, Channel]:
    pw_max, t_max, md_max, c_max = _endpoint(engine, MAX)
    pw_min, t_min, md_min, c_min = _endpoint(engine, MIN)
    return (
        Channel(slot=-1, engine_id=engine.id, setting=MAX, power_w=pw_max,
                thrust_mn=t_max, mdot_mg_s=md_max, c_m_s=c_max),
        Channel(slot=-1, engine_id=engine.id, setting=MIN, power_w=pw_min,
                thrust_mn=t_min, mdot_mg_s=md_min, c_m_s=c_min),
    )


def dedup_filter(raw_modes: list[OperationMode]) -> list[OperationMode]:
    """Keep, per p_used group (1e-6 W), the mode with least mdot_full.

    Ties on mdot_full break on lexicographic settings, making the table
    deterministic regardless of enumeration order.
    """
    ordered = sorted(raw_modes, key=lambda m: (-m.p_used_w, m.mdot_full_mg_s, m.settings))
    kept: list[OperationMode] = []
    for mode in ordered:
        if kept and abs(kept[-1].p_used_w - mode.p_used_w) <= _DEDUP_TOL_W:
            continue
        kept.append(mode)
    return kept


def _finalize(cluster, raw, cap_w, channels, filtered=True) -> ModeTable:
    if not raw:
        raise ValueError(f"no feasible mode under cap {cap_w} W")
    modes = dedup_filter(raw) if filtered else sorted(
        raw, key=lambda m: (-m.p_used_w, m.mdot_full_mg_s, m.settings))
    modes = tuple(
        OperationMode(index=i + 1, p_used_w=m.p_used_w, n_at_pmax=m.n_at_pmax,
                      n_at_pmin=m.n_at_pmin, settings=m.settings,
                      mdot_full_mg_s=m.mdot_full_mg_s)
        for i, m in enumerate(modes)
    )
    gamma_rows = tuple(_gamma_row(m, channels) for m in modes)
    return ModeTable(cluster=cluster, modes=modes, cap_w=cap_w,
                     channels=channels, gamma_rows=gamma_rows)


def _gamma_row(mode: OperationMode, channels) -> tuple[float, ...]:
    if channels[0].slot < 0:  # aggregate same-type channels
        return (float(mode.n_at_pmax), float(mode.n_at_pmin))
    row = []
    for ch in channels:
        row.append(1.0 if mode.settings[ch.slot] == ch.setting else 0.0)
    return tuple(row)


def enumerate_same_type(catalog: EngineCatalog, cluster: ClusterSpec, cap_w: float) -> ModeTable:
    """All (a at max, b at min) pairs with 1 <= a+b <= N_e under the cap."""
    if cluster.kind != "same_type":
        raise ValueError("enumerate_same_type requires a same_type cluster")
    if cap_w <= 0.0:
        raise ValueError(f"cap must be positive, got {cap_w}")
    engine = catalog[cluster.engine_ids[0]]
    ch_max, ch_min = _same_type_channels(engine)
    n_e = cluster.n_engines

    raw = []
    for a in range(n_e + 1):
        for b in range(n_e + 1 - a):
            if a + b == 0:
                continue
            p_used = a * ch_max.power_w + b * ch_min.power_w
            if p_used > cap_w:
                continue
            settings = (MAX,) * a + (MIN,) * b + (OFF,) * (n_e - a - b)
            raw.append(OperationMode(
                index=0, p_used_w=p_used, n_at_pmax=a, n_at_pmin=b,
                settings=settings,
                mdot_full_mg_s=a * ch_max.mdot_mg_s + b * ch_min.mdot_mg_s))
    return _finalize(cluster, raw, cap_w, (ch_max, ch_min))


def enumerate_mixed(catalog: EngineCatalog, cluster: ClusterSpec, cap_w: float,
                    filtered: bool = True) -> ModeTable:
    """Cartesian product of per-engine settings minus all-off, capped.

    filtered=False keeps duplicate p_used rows (the pre-filter table);
    the default applies dedup_filter.
    """
    if cap_w <= 0.0:
        raise ValueError(f"cap must be positive, got {cap_w}")
    engines = [catalog[eid] for eid in cluster.engine_ids]

    channels = []
    for slot, engine in enumerate(engines):
        for setting in (MAX, MIN):
            pw, t, md, c = _endpoint(engine, setting)
            channels.append(Channel(slot=slot, engine_id=engine.id, setting=setting,
                                    power_w=pw, thrust_mn=t, mdot_mg_s=md, c_m_s=c))
    channels = tuple(channels)
    by_slot = {(ch.slot, ch.setting): ch for ch in channels}

    raw = []
    for settings in itertools.product((OFF, MIN, MAX), repeat=len(engines)):
        if all(s == OFF for s in settings):
            continue
        p_used = 0.0
        mdot = 0.0
        for slot, s in enumerate(settings):
            if s == OFF:
                continue
            ch = by_slot[(slot, s)]
            p_used += ch.power_w
            mdot += ch.mdot_mg_s
        if p_used > cap_w:
            continue
        raw.append(OperationMode(
            index=0, p_used_w=p_used,
            n_at_pmax=sum(1 for s in settings if s == MAX),
            n_at_pmin=sum(1 for s in settings if s == MIN),
            settings=tuple(settings), mdot_full_mg_s=mdot))
    return _finalize(cluster, raw, cap_w, channels, filtered=filtered)


def build_table(catalog: EngineCatalog, cluster: ClusterSpec, cap_w: float) -> ModeTable:
    if cluster.kind == "same_type":
        return enumerate_same_type(catalog, cluster, cap_w)
    return enumerate_mixed(catalog, cluster, cap_w)


def mode_power_bounds(table: ModeTable, index: int) -> tuple[float, float]:
    """(lower, upper) watt interval on which mode `index` is the engaged one.

    Lower bound is the mode's own p_used; the upper bound is the previous
    (higher-power) mode's p_used, +inf for the first mode. The intervals tile
    (min p_used, +inf).
    """
    if not (1 <= index <= table.n_modes):
        raise IndexError(f"mode index {index} outside 1..{table.n_modes}")
    lower = table.modes[index - 1].p_used_w
    upper = math.inf if index == 1 else table.modes[index - 2].p_used_w
    return (lower, upper)
