import numpy as np
import pytest
from hypothesis import given, settings
from scipy import optimize

from csslab import observables as obs
from csslab import selfdual as sd
from csslab import variational as var
from csslab.discretization import make_grid
from csslab.errors import InvalidArgument, NoSignChange, NonConvergence
from csslab.state import EquivariantState, zero_state

from conftest import random_states, smooth_state


@pytest.fixture(scope="module")
def fine_soliton():
    return sd.soliton_profile(sd.SolitonParams(1, 1.0))


@settings(max_examples=40)
@given(state=random_states())
def test_j_is_twice_the_energy(state):
    j = var.j_functional(state)
    assert j == pytest.approx(2 * obs.energy_direct(state), rel=1e-9, abs=1e-12)


def test_j_trivial_and_soliton(fine_soliton):
    assert var.j_functional(zero_state(make_grid(64, 5.0), 0, 1.0)) == 0.0
    assert abs(var.j_functional(fine_soliton)) < 1e-4 * obs.kinetic(fine_soliton)
    with pytest.raises(InvalidArgument):
        var.j_functional(fine_soliton, m=-1)


def test_zero_j_normalization(fine_soliton):
    assert var.normalize_to_zero_j(fine_soliton) == pytest.approx(1.0, abs=1e-4)
    alpha = var.normalize_to_zero_j(fine_soliton, g=2.0)
    assert 0 < alpha < 1
    # oracle: bracketed root of alpha -> J(alpha u) on the same grid
    shape = fine_soliton.replace(g=2.0)

    def j_of(a):
        return var.j_functional(shape.replace(u=a * shape.u))

    root = optimize.brentq(j_of, 0.05, 0.999, xtol=1e-14)
    assert alpha == pytest.approx(root, rel=1e-10)
    scaled = shape.replace(u=alpha * shape.u)
    assert abs(var.j_functional(scaled)) < 1e-10 * obs.kinetic(scaled)


def test_no_sign_change_for_non_soliton_at_g1():
    grid = make_grid(1024, 12.0)
    r = grid.nodes
    bump = EquivariantState(m=0, g=1.0, grid=grid, u=0.1 * np.exp(-r ** 2 / 2))
    with pytest.raises(NoSignChange):
        var.normalize_to_zero_j(bump)
    with pytest.raises(InvalidArgument):
        var.normalize_to_zero_j(bump.replace(g=0.5))


def test_smallest_root_matches_brentq():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, c = rng.uniform(0.1, 2, 2)
        b = 2 * np.sqrt(a * c) * rng.uniform(1.01, 3)
        s = var._s_min(a, b, c)
        assert s == pytest.approx(optimize.brentq(lambda x: a - b * x + c * x * x, 0, b / (2 * c)), rel=1e-12)
    assert var._s_min(1.0, 1.0, 1.0) is None


@pytest.mark.parametrize("m,g", [(0, 1.0), (1, 2.0), (2, 1.5)])
def test_first_variation_matches_finite_differences(m, g):
    grid = make_grid(1024, 14.0)
    state = smooth_state(grid, m, g, [1.2, -0.5], [1.0, 1.7], [0.1, -0.2])
    grad = var.j_gradient(state)
    w = 2 * np.pi * grid.weights
    rng = np.random.default_rng(m)
    r = grid.nodes
    for _ in range(3):
        c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        du = sum(ck * (r / s) ** m * np.exp(-r ** 2 / (2 * s * s)) for ck, s in zip(c, (0.8, 1.3, 2.0)))
        h = 1e-5
        fd = (var.j_functional(state.replace(u=state.u + h * du))
              - var.j_functional(state.replace(u=state.u - h * du))) / (2 * h)
        analytic = np.real(w @ (np.conj(grad) * du))
        assert analytic == pytest.approx(fd, rel=1e-4)


def test_reduced_objective_gradient():
    prob = var._Problem(1, 2.0, var.VariationalOptions(n=512))
    coef = prob.scale(prob.seed())
    f, grad = prob.objective(coef)
    d = np.random.default_rng(1).standard_normal(coef.size)
    h = 1e-6
    fd = (prob.objective(coef + h * d)[0] - prob.objective(coef - h * d)[0]) / (2 * h)
    assert grad @ d == pytest.approx(fd, rel=1e-5)


def test_frequency_and_pohozaev_on_soliton(fine_soliton):
    assert abs(var.extract_frequency(fine_soliton)) < 1e-3
    assert var.eigen_residual(fine_soliton) < 1e-3
    p1, p2 = var.pohozaev_residuals(fine_soliton)
    assert p1 < 1e-3 and p2 < 1e-3


def test_zero_state_conventions():
    zero = zero_state(make_grid(64, 5.0), 0, 2.0)
    assert var.extract_frequency(zero) == 0.0
    wave = var.StandingWave(profile=zero, frequency=0.0, charge=0.0, j_value=0.0)
    assert var._with_frequency(wave).degenerate
    assert var.pohozaev_residuals(zero) == (0.0, 0.0)


def test_g2_minimizer_is_reproducible_and_monotone():
    waves = [var.minimize_charge(0, 2.0, var.VariationalOptions(seed=s)) for s in (0, 1)]
    assert waves[0].charge == pytest.approx(waves[1].charge, rel=1e-2)
    for w in waves:
        hist = np.array(w.history)
        assert np.all(np.diff(hist) <= 1e-12 * hist[0])
        assert max(var.pohozaev_residuals(w)) < 1e-2
        assert var.eigen_residual(w) < 1e-3
        assert abs(w.j_value) < 1e-8 * obs.kinetic(w.profile)


def test_threshold_constant_nonincreasing_in_g():
    values = [var.c_estimate(0, g, var.VariationalOptions(polish_evals=0)) for g in (1.0, 1.5, 2.0, 3.0)]
    assert all(b <= a * 1.01 for a, b in zip(values, values[1:]))


def test_nonconvergence():
    with pytest.raises(NonConvergence):
        var.minimize_charge(0, 2.0, var.VariationalOptions(max_iter=1, window=10_000))
    with pytest.raises(InvalidArgument):
        var.minimize_charge(0, 0.5)
