import numpy as np
import pytest
from scipy import special

from src.errors import DuplicatePointError, KernelDomainError
from src.kernels.bessel import log_bessel_k
from src.kernels.correlation import (
    corr_matrix,
    corr_matrix_batch,
    corr_matrix_deriv,
    corr_matrix_deriv_mu,
    cross_corr_matrix,
    limit_derivative_pattern,
    squared_exponential_corr_matrix,
)
from src.kernels.matern import HALF_INTEGER_ORDERS, _general, _half_integer, matern_1d, matern_1d_deriv
from src.models.design import DesignSet, LengthVector
from src.models.enums import KernelFamily
from src.models.kernel import KernelSpec

LAGS = np.linspace(0.01, 3.0, 60)


@pytest.mark.parametrize("nu", [0.3, 0.5, 1.2, 2.5, 4.0])
def test_matern_is_one_at_zero_lag(nu):
    assert matern_1d(0.0, nu) == pytest.approx(1.0)


@pytest.mark.parametrize("nu", HALF_INTEGER_ORDERS)
def test_half_integer_closed_forms_match_bessel_formula(nu):
    np.testing.assert_allclose(_half_integer(LAGS, nu), _general(LAGS, nu), rtol=1e-9)


@pytest.mark.parametrize("nu", [0.7, 1.5, 3.3])
def test_matern_decreases_strictly(nu):
    values = matern_1d(LAGS, nu)
    assert np.all(np.diff(values) < 0)
    assert np.all(values > 0)


def test_matern_rejects_bad_arguments():
    with pytest.raises(KernelDomainError):
        matern_1d(0.5, 0.0)
    with pytest.raises(KernelDomainError):
        matern_1d(-0.1, 2.5)
    with pytest.raises(KernelDomainError):
        matern_1d_deriv(0.0, 2.5)


@pytest.mark.parametrize("nu", [1.5, 2.5, 3.7])
def test_matern_derivative_matches_central_difference(nu):
    t = np.linspace(0.05, 2.5, 25)
    analytic = matern_1d_deriv(t, nu, analytic=True)
    h = 1e-6
    numeric = (matern_1d(t + h, nu) - matern_1d(t - h, nu)) / (2 * h)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-9)


def test_analytic_derivative_needs_nu_above_one():
    with pytest.raises(KernelDomainError):
        matern_1d_deriv(0.5, 0.8, analytic=True)
    assert matern_1d_deriv(0.5, 0.8) < 0


def test_large_nu_approaches_squared_exponential():
    t = np.linspace(0.1, 1.2, 12)
    np.testing.assert_allclose(matern_1d(t, 50.0), np.exp(-(t**2)), atol=0.02)


def test_bessel_half_order_closed_form():
    x = np.array([0.1, 1.0, 7.5, 40.0])
    np.testing.assert_allclose(log_bessel_k(0.5, x), 0.5 * np.log(np.pi / (2 * x)) - x, rtol=1e-10)


def test_log_bessel_is_finite_past_underflow():
    assert special.kv(2.5, 800.0) == 0.0
    value = log_bessel_k(2.5, 800.0)
    assert np.isfinite(value)
    assert value == pytest.approx(np.log(special.kve(2.5, 800.0)) - 800.0)


def test_general_order_tail_stays_positive():
    # z ~ 520: K_nu(z) alone is below 1e-226, the correlation must not collapse to 0 or nan
    tail = matern_1d(np.array([150.0, 200.0]), 1.7)
    assert np.all(tail > 0)
    assert tail[1] < tail[0] < 1e-100


def test_bessel_domain():
    with pytest.raises(KernelDomainError):
        log_bessel_k(-1.0, 1.0)
    with pytest.raises(KernelDomainError):
        log_bessel_k(1.0, 0.0)


@pytest.fixture
def cube_design(rng):
    return DesignSet(points=rng.random((9, 3)))


@pytest.mark.parametrize("family", list(KernelFamily))
def test_corr_matrix_is_a_correlation_matrix(cube_design, family):
    spec = KernelSpec(family=family, nu=2.5, dim=3)
    sigma = corr_matrix(cube_design, LengthVector(theta=[0.4, 0.7, 0.3]), spec)
    np.testing.assert_allclose(sigma, sigma.T)
    np.testing.assert_allclose(np.diag(sigma), 1.0)
    assert np.linalg.eigvalsh(sigma).min() > 0


def test_duplicated_points_are_rejected():
    design = DesignSet(points=[[0.1, 0.2], [0.5, 0.5], [0.1, 0.2]])
    with pytest.raises(DuplicatePointError):
        corr_matrix(design, LengthVector(theta=[1.0, 1.0]), KernelSpec(nu=2.5, dim=2))


def test_dimension_mismatch_is_rejected(cube_design):
    with pytest.raises(KernelDomainError):
        corr_matrix(cube_design, LengthVector(theta=[1.0, 1.0, 1.0]), KernelSpec(nu=2.5, dim=2))


@pytest.mark.parametrize("family", list(KernelFamily))
@pytest.mark.parametrize("i", [0, 2])
def test_derivative_matches_finite_difference(cube_design, family, i):
    spec = KernelSpec(family=family, nu=2.5, dim=3)
    theta = np.array([0.4, 0.7, 0.3])
    h = 1e-6 * theta[i]
    up = LengthVector(theta=theta).with_coordinate(i, theta[i] + h)
    down = LengthVector(theta=theta).with_coordinate(i, theta[i] - h)
    numeric = (corr_matrix(cube_design, up, spec) - corr_matrix(cube_design, down, spec)) / (2 * h)
    analytic = corr_matrix_deriv(cube_design, LengthVector(theta=theta), i, spec)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)


@pytest.mark.parametrize("family", list(KernelFamily))
def test_mu_derivative_is_rescaled_theta_derivative(cube_design, family):
    spec = KernelSpec(family=family, nu=1.7, dim=3)
    lengths = LengthVector(theta=[0.4, 0.7, 0.3])
    for i in range(3):
        d_theta = corr_matrix_deriv(cube_design, lengths, i, spec)
        d_mu = corr_matrix_deriv_mu(cube_design, lengths, i, spec)
        np.testing.assert_allclose(d_mu, -lengths.theta[i] ** 2 * d_theta, rtol=1e-10, atol=1e-14)


def test_derivative_index_out_of_range(cube_design):
    with pytest.raises(KernelDomainError):
        corr_matrix_deriv(cube_design, LengthVector(theta=[1.0, 1.0, 1.0]), 3, KernelSpec(nu=2.5, dim=3))


def test_batch_matches_single_evaluations(cube_design):
    spec = KernelSpec(nu=2.5, dim=3)
    thetas = np.array([[0.4, 0.7, 0.3], [1.0, 0.2, 0.5], [0.05, 0.05, 2.0]])
    stack = corr_matrix_batch(cube_design, thetas, spec)
    for g, row in enumerate(thetas):
        np.testing.assert_allclose(stack[g], corr_matrix(cube_design, LengthVector(theta=row), spec))


def test_cross_correlation_of_design_with_itself(cube_design):
    spec = KernelSpec(nu=2.5, dim=3)
    lengths = LengthVector(theta=[0.4, 0.7, 0.3])
    np.testing.assert_allclose(
        cross_corr_matrix(cube_design, cube_design, lengths, spec),
        corr_matrix(cube_design, lengths, spec),
        atol=1e-14,
    )


def test_squared_exponential_matrix():
    points = np.array([[0.0, 0.0], [0.3, 0.4]])
    sigma = squared_exponential_corr_matrix(points, LengthVector(theta=[0.5, 1.0]))
    assert sigma[0, 1] == pytest.approx(np.exp(-(0.6**2 + 0.4**2)))
    np.testing.assert_allclose(np.diag(sigma), 1.0)


def test_limit_pattern_matches_high_mu_derivative():
    design = DesignSet(points=[[0.0], [0.1], [0.5], [1.0]])
    spec = KernelSpec(nu=2.5, dim=1)
    pattern = limit_derivative_pattern(design, np.array([1.0]), 0, spec)
    expected = np.zeros((4, 4))
    expected[0, 1] = expected[1, 0] = -1.0
    np.testing.assert_allclose(pattern, expected)

    deriv = corr_matrix_deriv_mu(design, LengthVector.from_mu([200.0]), 0, spec)
    np.testing.assert_allclose(deriv / np.max(np.abs(deriv)), pattern, atol=1e-6)
