import numpy as np
import pytest

from nvscatter.evolve import evolve, phase
from nvscatter.scatter import x_norm


def test_zero_time_is_identity(sd_sub_coarse):
    out = evolve(sd_sub_coarse, 0.0)
    assert np.array_equal(out.t, sd_sub_coarse.t)
    assert np.array_equal(out.ray_t, sd_sub_coarse.ray_t)
    assert out.t is not sd_sub_coarse.t
    assert out.tau == sd_sub_coarse.tau


def test_modulus_preserved(sd_sub_coarse):
    out = evolve(sd_sub_coarse, 0.37)
    assert np.max(np.abs(np.abs(out.t) - np.abs(sd_sub_coarse.t))) <= 1e-14 * np.max(np.abs(out.t))


def test_phase_trivial_where_cube_is_imaginary():
    # arg k = pi/6 makes k^3 purely imaginary
    k = np.linspace(0.1, 5.0, 40) * np.exp(1j * np.pi / 6)
    assert np.max(np.abs(phase(k, 0.8) - 1)) <= 1e-12


def test_phase_value():
    k = 1.3 - 0.4j
    assert phase(k, 0.2) == pytest.approx(np.exp(0.2j * (k**3 + np.conj(k) ** 3)), rel=1e-15)


def test_group_law(sd_sub_coarse):
    a = evolve(evolve(sd_sub_coarse, 0.03), 0.04)
    b = evolve(sd_sub_coarse, 0.07)
    assert np.max(np.abs(a.t - b.t)) <= 1e-14 * np.max(np.abs(b.t))
    assert a.tau == pytest.approx(0.07) and b.tau == 0.07
    back = evolve(b, -0.07)
    assert np.max(np.abs(back.t - sd_sub_coarse.t)) <= 1e-14 * np.max(np.abs(b.t))


def test_mask_and_symmetry_relation_kept(sd_sub_coarse):
    out = evolve(sd_sub_coarse, 0.1)
    assert np.array_equal(out.mask, sd_sub_coarse.mask)
    assert out.rings == sd_sub_coarse.rings
    n0, rel0 = x_norm(sd_sub_coarse)
    n1, rel1 = x_norm(out)
    assert abs(n1 - n0) <= 1e-12 * n0
    # the phase is even under k -> -k followed by conjugation, so the relation survives
    assert abs(rel1 - rel0) <= 1e-12 * np.max(np.abs(sd_sub_coarse.kgrid.points * sd_sub_coarse.s))
