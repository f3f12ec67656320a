import numpy as np
import pytest

from nvscatter.errors import SymmetryViolation
from nvscatter.evolve import evolve
from nvscatter.field import make_grid, spectral_derivative
from nvscatter.pipeline import relative_error
from nvscatter.reconstruct import (
    ReconstructedState,
    compute_u,
    identity_defects,
    nv_residual,
    reconstruct_q,
)
from nvscatter.scatter import KGrid, ScatteringData

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def grid32():
    return make_grid(4.0, 32)


@pytest.fixture(scope="module")
def blank():
    kg = KGrid(m=16)
    return ScatteringData(kg, np.zeros((16, 16), complex), np.zeros((16, 16), bool))


def test_zero_data(blank, grid32):
    st = reconstruct_q(blank, grid32)
    assert np.all(st.q.values == 0) and np.all(st.u.values == 0)
    assert st.reality_defect == 0
    assert identity_defects(st) == (0.0, 0.0)


def test_zero_data_nv_residual(blank, grid32):
    _, rel, _ = nv_residual(blank, grid32, 0.05)
    assert rel == 0.0


def test_compute_u_identity(q_crit):
    u = compute_u(q_crit)
    lhs = spectral_derivative(u, "dbar").values
    rhs = spectral_derivative(q_crit, "d").values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))
    assert np.all(compute_u(q_crit.grid.zeros()).values == 0)


def test_u_two_routes(crit_state):
    st = crit_state(0.0)
    g = st.q.grid
    inner = np.abs(g.points) <= 0.6 * g.L
    from_q = compute_u(st.q).values
    assert np.max(np.abs(from_q - st.u.values)[inner]) <= 0.05 * np.max(np.abs(st.u.values)[inner])


def test_identity_violation_detected(crit_state):
    st = crit_state(0.0)
    d1, d2 = identity_defects(st)
    shifted = ReconstructedState(st.tau, st.q, st.u, st.a1.with_values(st.a1.values + 1.0), st.a2, 0.0)
    e1, _ = identity_defects(shifted)
    assert e1 > 10 * d1


def test_broken_symmetry_refused(sd_crit, grid32):
    with pytest.raises(SymmetryViolation):
        reconstruct_q(sd_crit.with_t(sd_crit.t * np.exp(0.5j)), grid32)


def test_short_time_recovery(sd_crit, grid32):
    q0 = reconstruct_q(sd_crit, grid32).q.values
    gaps = [relative_error(reconstruct_q(evolve(sd_crit, tau), grid32).q.values, q0)
            for tau in (0.02, 0.01, 0.005)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_two_reconstruction_routes(sd_crit, grid32):
    st = reconstruct_q(sd_crit, grid32, direct=True)
    assert relative_error(st.q_direct.values, st.q.values) <= 0.02


def test_linear_regime_residual(sd_linear, lin_state, recgrid):
    tau, dtau = 0.05, 1e-3
    states = [lin_state(t) for t in (tau - dtau, tau, tau + dtau)]
    _, rel, _ = nv_residual(sd_linear, recgrid, tau, dtau, linear=True, states=states)
    assert rel <= 5e-2
