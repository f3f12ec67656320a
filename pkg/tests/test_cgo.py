import numpy as np
import pytest

from nvscatter.cgo import (
    apply_faddeev_periodic,
    faddeev_multiplier,
    faddeev_operator,
    snap_k,
    solve_cgo,
    solve_cgo_batch,
)
from nvscatter.errors import ConfigurationError, NumericalError
from nvscatter.field import Field, make_grid
from nvscatter.potentials import bump, perturb


def test_operator_inverts_green_convolution():
    g = make_grid(4.0, 256)
    k = 1.0 + 0.5j
    f = Field(g, np.exp(-3.0 * np.abs(g.points - 0.2) ** 2))
    back = faddeev_operator(apply_faddeev_periodic(f, k), k).values
    assert np.max(np.abs(back - f.values)) <= 1e-8 * f.sup()


def test_multiplier_finite_at_default_offset():
    g = make_grid(4.0, 64)
    for k in (1.0, 0.3 - 2j, 5.5 + 5.5j):
        assert np.all(np.isfinite(faddeev_multiplier(g, k).values))


def test_multiplier_rejects_lattice_hit():
    g = make_grid(4.0, 64)
    with pytest.raises(NumericalError):
        faddeev_multiplier(g, 1.0, offset=0)


def test_snap_moves_colliding_k():
    g = make_grid(4.0, 64)
    cell = np.pi / g.L
    # -2 conj(k) on the shifted lattice
    target = cell * (3 + 2j) + 0.5 * cell * (1 + 1j)
    k = -0.5 * np.conj(target)
    k_used, snapped = snap_k(g, k)
    assert snapped and k_used != k
    assert abs(k_used - k) <= 0.5 * cell
    assert np.all(np.isfinite(faddeev_multiplier(g, k_used).values))
    assert snap_k(g, 1.0) == (1.0, False)


def test_green_of_zero():
    g = make_grid(4.0, 64)
    assert np.all(apply_faddeev_periodic(g.zeros(), 2.0).values == 0)


def test_zero_potential():
    g = make_grid(4.0, 64)
    r = solve_cgo(Field(g, np.zeros((64, 64)), real=True), 1.0 + 1j)
    assert np.all(r.mu.values == 1)
    assert r.residual == 0 and r.iterations == 0 and not r.exceptional


def test_k_zero_rejected(q_crit):
    with pytest.raises(ConfigurationError):
        solve_cgo(q_crit, 0)
    with pytest.raises(ConfigurationError):
        solve_cgo_batch(q_crit, [1.0, 0.0])


def test_conductivity_not_exceptional(q_crit):
    r = solve_cgo(q_crit, 1.0)
    assert not r.exceptional
    assert r.residual <= 1e-8


def test_mu_decays_toward_boundary(q_crit):
    m = solve_cgo(q_crit, 1.0).mu.values - 1.0
    edge = np.abs(q_crit.grid.points) >= 0.95 * q_crit.grid.L
    assert np.max(np.abs(m[edge])) <= 0.1 * np.max(np.abs(m))


def test_kernel_and_periodic_routes_agree(q_crit):
    a = solve_cgo(q_crit, 1.0).mu.values
    b = solve_cgo(q_crit, 1.0, method="periodic").mu.values
    assert np.max(np.abs(a - b)) <= 0.02 * np.max(np.abs(a - 1))


def test_unknown_method(q_crit):
    with pytest.raises(ConfigurationError):
        solve_cgo(q_crit, 1.0, method="spectral")


def test_resolvent_continuity(q_crit):
    b = bump(q_crit.grid, 0.3 + 0.2j, 0.5)
    mu0 = solve_cgo(q_crit, 1.0).mu.values
    diffs = [np.max(np.abs(solve_cgo(perturb(q_crit, b, d), 1.0).mu.values - mu0))
             for d in (1e-1, 1e-2, 1e-3)]
    assert diffs[0] > diffs[1] > diffs[2]


@pytest.mark.slow
def test_born_consistency(q_linear, sd_linear):
    # first Born term by separable sums: e_k(x) = exp(2i k1 x1) exp(-2i k2 x2)
    g = q_linear.grid
    kg = sd_linear.kgrid
    x = g.axis
    kax = kg.grid.axis
    E1 = np.exp(2j * np.outer(kax, x))
    E2 = np.exp(-2j * np.outer(kax, x))
    born = g.h**2 * E1 @ q_linear.values @ E2.T
    use = ~sd_linear.mask
    t = sd_linear.t
    assert np.max(np.abs(t - born)[use]) <= 0.05 * np.max(np.abs(t[use]))
