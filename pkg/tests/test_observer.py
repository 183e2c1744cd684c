import numpy as np

from adobs.observer import observer_rhs
from adobs.plant import phi, realize

from conftest import L_STAR, THETA_AB_STAR, THETA_STAR


def test_observer_matches_plant_when_state_and_parameters_are_exact(rng):
    real = realize(THETA_STAR)
    for _ in range(20):
        x = rng.standard_normal(3)
        u = rng.standard_normal()
        dx = observer_rhs(x, u, real.output(x), THETA_AB_STAR, L_STAR, real)
        assert np.allclose(dx, real.rhs(x, u), atol=1e-12)


def test_error_dynamics_are_hurwitz_closed_loop(rng):
    """With exact parameters, e' = (A - L c^T) e, eigenvalues all -1."""
    real = realize(THETA_STAR)
    x = rng.standard_normal(3)
    u = 0.3
    e = rng.standard_normal(3)
    de = observer_rhs(x + e, u, real.output(x), THETA_AB_STAR, L_STAR, real) - real.rhs(x, u)
    closed = real.a - np.outer(L_STAR, real.c)
    assert np.allclose(de, closed @ e, atol=1e-12)
    assert np.allclose(np.linalg.eigvals(closed), -1.0, atol=1e-4)


def test_precomputed_regressor_is_used():
    real = realize(THETA_STAR)
    x = np.array([1.0, 2.0, 3.0])
    a = observer_rhs(x, 1.0, 0.0, THETA_AB_STAR, L_STAR, real)
    b = observer_rhs(x, 1.0, 0.0, THETA_AB_STAR, L_STAR, real, phi_t=phi(x, 1.0))
    assert np.array_equal(a, b)


def test_zero_estimates_give_pure_output_injection():
    real = realize(THETA_STAR)
    dx = observer_rhs(np.zeros(3), 5.0, 2.0, np.zeros(3), L_STAR, real)
    assert np.allclose(dx, 2.0 * L_STAR)


def test_observer_examples():
    real = realize(THETA_STAR)
    assert np.array_equal(observer_rhs(np.zeros(3), 0.0, 0.0, np.zeros(3), np.zeros(3), real), np.zeros(3))
    dx = observer_rhs([1.0, 2.0, 3.0], 4.0, 3.0, THETA_AB_STAR, L_STAR, real)
    assert np.array_equal(dx, [4.0, 2.0, -2.0])


def test_any_gain_is_inert_when_output_matches(rng):
    real = realize(THETA_STAR)
    x = rng.standard_normal(3)
    for _ in range(5):
        l = rng.standard_normal(3) * 100
        assert np.allclose(observer_rhs(x, 0.7, real.output(x), THETA_AB_STAR, l, real), real.rhs(x, 0.7))
