"""Shared fixtures: catalogs, mode tables, and the small solved benchmark.

The mini problem is a 300-day single-engine rendezvous generated by
scripts/make_mini_case.py whose target states come from forward propagation
of a known thrust profile, so a fuel-optimal solution is guaranteed to exist
and must end at least as heavy as the generating profile. Solving it once
per session keeps the solver- and acceptance-level tests fast.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from csctraj.config import build_problem, load_config
from csctraj.engines import load_catalog
from csctraj.modes import default_cap, enumerate_same_type, same_type_cluster
from csctraj.power import PowerModel
from csctraj.solver import continuation_solve

REPO = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def power_nominal():
    # 30 kW array, 500 W bus, no decay: the reference mission power model
    return PowerModel(p0_bol_kw=30.0, p_bus_kw=0.5)


@pytest.fixture(scope="session")
def table_four(catalog, power_nominal):
    # four engines of type 3 under the 46875 W feasibility cap: 14 modes
    return enumerate_same_type(
        catalog, same_type_cluster(3, 4), default_cap(power_nominal))


@pytest.fixture(scope="session")
def mini_problem():
    return build_problem(load_config(REPO / "configs" / "mini.json"))


@pytest.fixture(scope="session")
def mini_solution(mini_problem):
    result = continuation_solve(
        mini_problem.setup, mini_problem.config.solver, seed=0)
    assert result.success, f"mini case failed to converge: {result.message}"
    return result
