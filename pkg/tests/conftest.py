"""Shared, session-scoped numerical fixtures.

The forward transform at default resolution takes about two minutes and a
reconstruction on the 64^2 subgrid about forty seconds, so every expensive
object is built once and reused by all test modules.
"""

from __future__ import annotations

import time

import pytest

from nvscatter.evolve import evolve
from nvscatter.field import make_grid
from nvscatter.oracle import step_nv
from nvscatter.potentials import PotentialSpec, make_potential
from nvscatter.reconstruct import reconstruct_q
from nvscatter.scatter import KGrid, scattering_transform

CRITICAL = PotentialSpec(beta=0.5)
SUBCRITICAL = PotentialSpec(family="perturbed", beta=0.5, eps=0.5)
SUPERCRITICAL = PotentialSpec(family="perturbed", beta=0.5, eps=-0.5)

ACCEPTANCE_LINES: list[str] = []
TIMINGS: dict[str, float] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def xgrid():
    return make_grid(4.0, 128)


@pytest.fixture(scope="session")
def recgrid():
    return make_grid(4.0, 64)


@pytest.fixture(scope="session")
def q_crit(xgrid):
    return make_potential(xgrid, CRITICAL)


@pytest.fixture(scope="session")
def q_sub(xgrid):
    return make_potential(xgrid, SUBCRITICAL)


@pytest.fixture(scope="session")
def q_super(xgrid):
    return make_potential(xgrid, SUPERCRITICAL)


@pytest.fixture(scope="session")
def sd_crit(q_crit):
    t0 = time.perf_counter()
    sd = scattering_transform(q_crit, KGrid())
    TIMINGS["forward"] = time.perf_counter() - t0
    return sd


@pytest.fixture(scope="session")
def sd_sub_coarse(q_sub):
    """Subcritical data on a coarse k-grid (the small-k ray is unaffected)."""
    return scattering_transform(q_sub, KGrid(m=16))


@pytest.fixture(scope="session")
def crit_state(sd_crit, recgrid):
    """Memoised reconstructions ``tau -> ReconstructedState`` of the critical data."""
    cache = {}

    def get(tau: float):
        key = round(float(tau), 9)
        if key not in cache:
            t0 = time.perf_counter()
            cache[key] = reconstruct_q(evolve(sd_crit, key), recgrid)
            TIMINGS[f"inverse {key:g}"] = time.perf_counter() - t0
        return cache[key]

    return get


@pytest.fixture(scope="session")
def q_direct_05(q_crit):
    return step_nv(q_crit, 0.05)


@pytest.fixture(scope="session")
def q_linear():
    return make_potential(make_grid(4.0, 128), PotentialSpec(beta=0.5, scale=1e-3))


@pytest.fixture(scope="session")
def sd_linear(q_linear):
    return scattering_transform(q_linear, KGrid())



@pytest.fixture(scope="session")
def lin_state(sd_linear, recgrid):
    cache = {}

    def get(tau: float):
        key = round(float(tau), 9)
        if key not in cache:
            cache[key] = reconstruct_q(evolve(sd_linear, key), recgrid)
        return cache[key]

    return get
