import numpy as np
import pytest

from nvscatter.errors import ConfigurationError, PotentialSpecError
from nvscatter.field import Field, make_grid, smooth_window, spectral_derivative
from nvscatter.potentials import (
    PotentialSpec,
    bump,
    classify,
    classify_by_form,
    conductivity_potential,
    dbar_d,
    green_convolve,
    make_potential,
    perturb,
    positive_solution,
)


@pytest.fixture(scope="module")
def g():
    return make_grid(4.0, 128)


def _sqrt_sigma(g, beta=0.5):
    return np.sqrt(1 + beta * bump(g))


def test_zero_amplitude_gives_zero(g):
    q = conductivity_potential(g, PotentialSpec(beta=0.0))
    assert np.all(q.values == 0)


def test_construction_identity(g, q_crit):
    psi = _sqrt_sigma(g)
    res = -dbar_d(psi, g).real + q_crit.values.real * psi
    assert np.max(np.abs(res)) <= 1e-8
    assert np.max(np.abs(res)) <= 1e-8 * q_crit.sup()


def test_weak_form_pairing(g, q_crit):
    psi = _sqrt_sigma(g)
    phi = np.exp(-2 * np.abs(g.points - 0.3) ** 2)
    dpsi = spectral_derivative(Field(g, psi - 1), "d").values
    dbphi = spectral_derivative(Field(g, phi), "dbar").values
    form = np.sum(dpsi * dbphi + q_crit.values * psi * phi)
    scale = np.sum(np.abs(q_crit.values * psi * phi))
    assert abs(form) <= 1e-6 * scale


def test_nonpositive_sigma_rejected(g):
    with pytest.raises(PotentialSpecError):
        conductivity_potential(g, PotentialSpec(beta=-1.5))


def test_support_must_fit(g):
    with pytest.raises(ConfigurationError):
        make_potential(g, PotentialSpec(center=1.0 + 0j))


def test_bump_is_compact(g):
    b = bump(g, 0.2j, 0.5)
    assert 0.9 < b.max() <= 1.0
    assert np.all(b[np.abs(g.points - 0.2j) >= 1.0] == 0)
    assert np.all(b >= 0)


def test_perturb(g, q_crit):
    b = bump(g)
    assert np.array_equal(perturb(q_crit, b, 0.0).values, q_crit.values)
    with pytest.raises(ConfigurationError):
        perturb(q_crit, -b, 0.1)


def test_perturbation_sign_decides_class(g, q_crit):
    b = bump(g)
    up = classify_by_form(perturb(q_crit, b, 0.1))
    down = classify_by_form(perturb(q_crit, b, -0.1))
    assert up.lambda_min >= -up.tol_eig
    assert down.lambda_min < -down.tol_eig
    assert down.class_guess == "supercritical"


def test_zero_potential_form(g):
    rep = classify_by_form(Field(g, np.zeros((g.n, g.n)), real=True))
    assert rep.lambda_min >= -1e-10
    assert rep.class_guess == "critical-or-subcritical"


def test_conductivity_form_nonnegative(q_crit):
    rep = classify_by_form(q_crit)
    assert rep.lambda_min >= -rep.tol_eig
    assert rep.tol_eig == pytest.approx(1e-6 * q_crit.sup())


def test_deep_well_below_variational_bound(g):
    q = make_potential(g, PotentialSpec(family="perturbed", beta=0.0, eps=-1.0))
    phi = np.exp(-0.02 * np.abs(g.points) ** 2)
    dphi = spectral_derivative(Field(g, phi), "d").values
    rayleigh = (np.sum(np.abs(dphi) ** 2) + np.sum(q.values.real * phi**2)) / np.sum(phi**2)
    assert rayleigh < 0
    rep = classify_by_form(q)
    assert rep.lambda_min <= rayleigh + 1e-9
    assert rep.class_guess == "supercritical"


def test_supercritical_iff_below_tolerance(g, q_crit):
    b = bump(g, 0.3 + 0.2j, 0.5)
    for eps in (-0.3, -0.02, 0.0, 0.02, 0.3):
        rep = classify_by_form(perturb(q_crit, b, eps))
        assert (rep.class_guess == "supercritical") == (rep.lambda_min < -rep.tol_eig)


def test_form_monotone_in_eps(g, q_crit):
    b = bump(g, 0.3 + 0.2j, 0.5)
    lam = [classify_by_form(perturb(q_crit, b, e)).lambda_min for e in (-0.2, -0.1, 0.0, 0.1, 0.2)]
    assert np.all(np.diff(lam) >= 0)


def test_green_function_inverts_operator(g):
    # -dbar d G = delta, checked on a smooth source inside the flat window
    f = np.exp(-4 * np.abs(g.points) ** 2)
    u = green_convolve(f, g)
    w = smooth_window(g, 1.0, 3.8)
    lap = -dbar_d(u * w, g)
    assert np.max(np.abs(lap - f)[w == 1]) <= 1e-4 * f.max()


def test_positive_solution_zero(g):
    psi, a, c = positive_solution(Field(g, np.zeros((g.n, g.n)), real=True))
    assert np.max(np.abs(psi.values - 1)) <= 1e-10
    assert abs(a) <= 1e-10
    assert c == pytest.approx(1.0, abs=1e-10)


def test_positive_solution_conductivity(g, q_crit):
    psi, a, c = positive_solution(q_crit)
    assert abs(a) <= 0.02
    assert np.max(np.abs(psi.values.real - _sqrt_sigma(g))) <= 1e-4


def test_positive_solution_log_growth(g, q_crit):
    _, a, _ = positive_solution(perturb(q_crit, bump(g), 0.1))
    assert a > 0


def test_full_classification(q_crit, q_sub, q_super):
    assert classify(q_crit).class_guess == "critical"
    sub = classify(q_sub)
    assert sub.class_guess == "subcritical"
    assert sub.a_est > 0
    assert classify(q_super).class_guess == "supercritical"
