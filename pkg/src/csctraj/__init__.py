"""Fuel-optimal low-thrust rendezvous with discrete-mode engine clusters.

Indirect (costate-based) trajectory optimization where the engine cluster's
admissible operating points form a finite power ladder. Two nested tanh
smoothings turn the discrete mode table and bang-off throttle into a smooth
feedback law, and a continuation over the smoothing widths recovers the
switching structure.
"""

from .control import ControlDecision, PrimerUndefinedError, SmoothingParams
from .dynamics import (
    AU_KM,
    MU_SUN_KM3_S2,
    TU_S,
    CanonicalUnits,
    CartesianState,
    MeeState,
    cartesian_from_mee,
    load_ephemeris,
    mee_from_cartesian,
    planet_position,
    secondary_accel,
)
from .engines import EngineCatalog, EngineSpec, load_catalog
from .modes import (
    ClusterSpec,
    ModeTable,
    OperationMode,
    build_table,
    default_cap,
    mixed_cluster,
    same_type_cluster,
)
from .power import PowerModel, available_power

__version__ = "0.1.0"

__all__ = [
    "AU_KM",
    "MU_SUN_KM3_S2",
    "TU_S",
    "CanonicalUnits",
    "CartesianState",
    "ClusterSpec",
    "ControlDecision",
    "EngineCatalog",
    "EngineSpec",
    "MeeState",
    "ModeTable",
    "OperationMode",
    "PowerModel",
    "PrimerUndefinedError",
    "SmoothingParams",
    "available_power",
    "build_table",
    "cartesian_from_mee",
    "default_cap",
    "load_catalog",
    "load_ephemeris",
    "mee_from_cartesian",
    "mixed_cluster",
    "planet_position",
    "same_type_cluster",
    "secondary_accel",
]
