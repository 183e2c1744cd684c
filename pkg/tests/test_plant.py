import numpy as np
import pytest

from adobs.errors import DegenerateParameterError
from adobs.plant import (
    EXAMPLE,
    SignalSpec,
    control,
    phi,
    plant_rhs,
    psi_ab,
    psi_stack,
    realize,
    reference,
    theta_ab,
)

from conftest import PSI_AB_STAR, THETA_AB_STAR, THETA_STAR


def transfer_function(a, b, c):
    """Numerator and denominator of C (sI - A)^-1 B by the determinant
    identity det(sI - A + B C) = det(sI - A) (1 + C (sI - A)^-1 B)."""
    den = np.poly(a)
    num = np.poly(a - np.outer(b, c)) - den
    return num, den


def test_theta_ab_at_true_parameters():
    assert np.array_equal(theta_ab(THETA_STAR), THETA_AB_STAR)


def test_psi_ab_at_true_parameters():
    assert np.array_equal(psi_ab(THETA_STAR), PSI_AB_STAR)


def test_regressor_reproduces_linear_dynamics(rng):
    """Phi^T(x, u) Theta_AB(theta) = A(theta) x + B(theta) u."""
    for _ in range(50):
        th = rng.uniform(0.2, 3.0, 3) * rng.choice([-1, 1], 3)
        real = realize(th)
        x = rng.standard_normal(3)
        u = rng.standard_normal()
        assert np.allclose(phi(x, u) @ theta_ab(th), real.rhs(x, u), atol=1e-12)
        assert np.allclose(plant_rhs(x, u, th), real.rhs(x, u))


def test_observable_form_matches_transfer_function(rng):
    """psi_a are minus the denominator coefficients, psi_b the numerator ones."""
    for _ in range(30):
        th = rng.uniform(0.3, 2.0, 3)
        real = realize(th)
        num, den = transfer_function(real.a, real.b, real.c)
        psi_a, psi_b = psi_stack(th)
        assert np.allclose(psi_a, -den[1:], atol=1e-10)
        assert np.allclose(psi_b, num[1:], atol=1e-10)
        stacked = np.concatenate([psi_a, psi_b])
        rows = np.asarray(EXAMPLE.l_ab_rows) - 1
        assert np.allclose(stacked[rows], psi_ab(th))


def test_example_transfer_function_at_true_parameters():
    real = realize(THETA_STAR)
    num, den = transfer_function(real.a, real.b, real.c)
    # (-s^2 - 2) / (s^3 + s)
    assert np.allclose(den, [1.0, 0.0, 1.0, 0.0], atol=1e-12)
    assert np.allclose(num, [0.0, -1.0, 0.0, -2.0], atol=1e-12)


def test_realize_output_row():
    real = realize(THETA_STAR)
    assert real.output(np.array([4.0, 5.0, 6.0])) == 6.0
    assert (real.n, real.n_theta, real.n_big_theta) == (3, 3, 3)


@pytest.mark.parametrize("bad", [(0.0, 1.0, 1.0), (1.0, 1.0, 0.0), (1.0, np.nan, 1.0), (1.0, 1.0)])
def test_realize_rejects_degenerate_parameters(bad):
    with pytest.raises(DegenerateParameterError):
        realize(bad)


def test_reference_and_control():
    spec = SignalSpec()
    assert reference(0.0, spec) == 100.0
    t = 0.3
    assert reference(t, spec) == pytest.approx(100 + 2.5 * np.exp(-t) * np.sin(10 * t))
    assert control(100.0, 99.0, spec) == -25.0


def test_signal_spec_rejects_nonfinite():
    with pytest.raises(ValueError):
        SignalSpec(ref_amp=np.inf)


def test_realization_at_true_parameters():
    real = realize(THETA_STAR)
    assert np.array_equal(real.a, [[0.0, 2.0, 0.0], [-1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    assert np.array_equal(real.b, [0.0, 0.0, -1.0])


def test_regressor_examples():
    assert np.array_equal(phi([1.0, 2.0, 3.0], 4.0), np.diag([2.0, 2.0, 2.0]))
    assert np.array_equal(phi([0.0, 0.0, 0.0], 0.0), np.zeros((3, 3)))
    assert np.array_equal(phi([0.0, 1.0, 0.0], 1.0), np.diag([1.0, 0.0, 0.0]))


def test_parameter_map_examples():
    assert np.array_equal(theta_ab((0.0, 0.0, 0.0)), [0.0, 0.0, 0.0])
    assert np.array_equal(theta_ab((2.0, 3.0, 5.0)), [5.0, 3.0, 5.0])
    assert np.array_equal(psi_ab((1.0, 1.0, 1.0)), [-3.0, 1.0, 2.0])
    assert np.array_equal(psi_ab((1.7, 0.0, -2.5)), [0.0, -2.5, 0.0])


def test_signal_examples():
    spec = SignalSpec()
    assert reference(np.pi / 20, spec) == pytest.approx(100 + 2.5 * np.exp(-np.pi / 20), rel=1e-15)
    assert reference(50.0, spec) == pytest.approx(100.0, abs=1e-18)
    assert control(3.0, 3.0, spec) == 0.0
    assert control(100.0, 0.0, spec) == -2500.0
    assert control(0.0, 1.0, spec) == 25.0
