import warnings

import numpy as np
import pytest

from nvscatter.errors import InstabilityError
from nvscatter.evolve import phase
from nvscatter.field import Field, make_grid
from nvscatter.oracle import linear_solution, max_stable_dt, step_nv
from nvscatter.pipeline import relative_error
from nvscatter.scatter import transform_points


def test_linear_zero_time(q_crit):
    assert np.max(np.abs(linear_solution(q_crit, 0.0).values - q_crit.values)) <= 1e-14 * q_crit.sup()


def test_linear_preserves_l2(q_crit):
    out = linear_solution(q_crit, 0.3)
    n0 = np.linalg.norm(q_crit.values)
    assert np.linalg.norm(out.values) == pytest.approx(n0, rel=1e-12)


def test_linear_pad_and_band(q_crit):
    b = linear_solution(q_crit, 0.01, pad=2)
    full = linear_solution(q_crit, 0.01, pad=2, band=(0.0, np.inf))
    assert np.max(np.abs(full.values - b.values)) <= 1e-14 * b.sup()
    # without padding the band is an exact spectral projection
    lo, hi = 1.0, 6.0
    banded = linear_solution(q_crit, 0.01, band=(lo, hi))
    spec = np.fft.fft2(banded.values)
    r = np.abs(q_crit.grid.zeta)
    outside = (r < lo) | (r >= hi)
    assert np.max(np.abs(spec[outside])) <= 1e-12 * np.max(np.abs(spec))
    with pytest.raises(ValueError):
        linear_solution(q_crit, 0.01, pad=0)


def test_born_level_phase_convention(q_linear):
    # forward transform of the linearly evolved field versus phase-evolved data
    rng = np.random.default_rng(1)
    ks = rng.uniform(-4, 4, 24) + 1j * rng.uniform(-4, 4, 24)
    ks = ks[np.abs(ks) > 0.5]
    tau = 0.05
    t0, _ = transform_points(q_linear, ks)
    t1, _ = transform_points(linear_solution(q_linear, tau, pad=4), ks)
    ev = t0 * phase(ks, tau)
    assert np.max(np.abs(t1 - ev)) <= 0.05 * np.max(np.abs(ev))
    wrong = t0 * phase(ks, -tau)
    assert np.max(np.abs(t1 - wrong)) > 0.2 * np.max(np.abs(ev))


def test_step_zero_field():
    g = make_grid(4.0, 64)
    out = step_nv(Field(g, np.zeros((64, 64)), real=True), 0.1)
    assert np.all(out.values == 0)


def test_max_stable_dt():
    g = make_grid(4.0, 128)
    assert max_stable_dt(g) == pytest.approx(0.5 * 8 * (g.h / np.pi) ** 3, rel=1e-15)


@pytest.mark.slow
def test_small_amplitude_matches_linear(q_linear):
    a = step_nv(q_linear, 0.05)
    b = linear_solution(q_linear, 0.05)
    assert relative_error(a.values, b.values) <= 1e-4


def test_mean_conserved(q_crit):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = step_nv(q_crit, 0.01, steps=50)
    m0 = q_crit.values.sum()
    assert abs(out.values.sum() - m0) <= 1e-8 * abs(m0)


def test_step_halving(q_crit):
    tau = 0.01
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        q25, q50, q100 = (step_nv(q_crit, tau, steps=s).values for s in (25, 50, 100))
    first = np.max(np.abs(q50 - q25))
    second = np.max(np.abs(q100 - q50))
    assert second <= 0.1 * first


def test_instability_detected(q_crit):
    big = q_crit.with_values(50 * q_crit.values)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(InstabilityError):
            step_nv(big, 0.05, steps=2)
