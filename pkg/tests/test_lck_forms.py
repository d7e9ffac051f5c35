import numpy as np
import pytest

from lcklab.errors import DimensionUnsupported
from lcklab.lck_forms import (check_dtheta_zero, check_gamma_pullback, check_lck_identity,
                              d_two_form, form_sample, metric, real_matrix, two_form,
                              wedge_1_2)

from conftest import DIAGONAL, JORDAN, RADIAL, annulus_points, field_for


def test_flat_kahler_form():
    # H = I/2 is the Hessian of |z|^2/2; omega = sum dx ^ dy, g = Euclidean
    Om = two_form(0.5 * np.eye(2))
    assert np.allclose(Om, [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]])
    assert np.allclose(metric(0.5 * np.eye(2)), np.eye(4))


def test_metric_is_omega_with_complex_structure():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    H = X @ X.conj().T
    J = real_matrix(1j * np.eye(2))
    # g(u, v) = omega(u, J v)
    assert np.allclose(metric(H), two_form(H) @ J)


def test_exterior_algebra_identities():
    rng = np.random.default_rng(1)
    theta = rng.normal(size=4)
    B = rng.normal(size=(4, 4))
    Om = B - B.T
    W = wedge_1_2(theta, Om)
    assert np.allclose(W, -np.transpose(W, (1, 0, 2)))
    # d of a constant-coefficient form is zero
    assert np.allclose(d_two_form(np.zeros((4, 4, 4))), 0)


def test_radial_lee_form(radial):
    fs = form_sample(radial, np.array([1.0, 0.0]))
    # theta = -d log |z|^2 = -2 x dx / |z|^2
    assert np.allclose(fs.theta, [-2, 0, 0, 0], atol=1e-12)
    assert fs.automorphy_factor == pytest.approx(0.25)


@pytest.mark.parametrize("A", [RADIAL, DIAGONAL, JORDAN], ids=["radial", "diagonal", "jordan"])
def test_lck_identities(A):
    P = field_for(A, 2.5)
    Z = annulus_points(A, 25, seed=3)
    assert check_dtheta_zero(P, Z).passed
    assert check_lck_identity(P, Z).passed
    rep = check_gamma_pullback(P, Z)
    assert rep.passed
    assert rep.details["max_factor_error"] <= 1e-8
    assert rep.details["max_theta_invariance"] <= 1e-6


def test_lck_identity_dimension_limit():
    A = 0.5 * np.eye(4, dtype=complex)
    with pytest.raises(DimensionUnsupported):
        check_lck_identity(field_for(A, 1.0), np.ones((1, 4), dtype=complex))


def test_lck_identity_detects_a_wrong_lee_form(jordan):
    """Negative control: pairing omega with the Lee form of a different lambda fails."""
    from lcklab import lck_forms
    z = annulus_points(JORDAN, 1, seed=8)
    fs = lck_forms.form_samples(jordan, z)[0]
    wrong = lck_forms.form_samples(jordan.with_lambda(3.0), z)[0]
    good = lck_forms.lck_identity_residuals(jordan, z)[0]
    rhs_good = wedge_1_2(fs.theta, two_form(fs.omega))
    rhs_bad = wedge_1_2(wrong.theta, two_form(fs.omega))
    assert good < 1e-4
    assert np.abs(rhs_good - rhs_bad).max() / np.abs(rhs_good).max() > 0.1
