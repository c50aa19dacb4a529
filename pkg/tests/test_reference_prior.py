import numpy as np
import pytest

from src.config.settings import settings
from src.errors import PriorBoundError
from src.kernels.correlation import corr_matrix_deriv_mu
from src.models.design import LengthVector
from src.models.enums import BasisKind, KernelFamily, Parametrization
from src.reference_prior.prior import (
    check_prior_bound,
    conditional_prior,
    conditional_prior_berger,
    log_conditional_prior_batch,
    log_prior_product,
    prior_1d,
    prior_1d_berger,
    prior_envelope_h,
    prior_upper_bound,
    sphere_quadratic_variance,
)


@pytest.mark.parametrize("basis", [BasisKind.NONE, BasisKind.CONSTANT, BasisKind.AFFINE])
@pytest.mark.parametrize("n", [5, 7, 10])
def test_berger_form_matches_projected_form_in_one_dimension(make_context, rng, basis, n):
    points = np.linspace(0.05, 0.95, n) + rng.uniform(-0.02, 0.02, n)
    context = make_context(points.reshape(-1, 1), basis=basis)
    for theta in np.linspace(0.05, 0.5, 6):
        assert prior_1d(theta, context) == pytest.approx(prior_1d_berger(theta, context), rel=1e-7)


@pytest.mark.parametrize("family", list(KernelFamily))
def test_berger_form_matches_projected_form(make_context, rng, family):
    context = make_context(rng.random((10, 2)), family=family)
    lengths = LengthVector(theta=[0.3, 0.45])
    for i in range(2):
        standard = conditional_prior(i, lengths, context)
        berger = conditional_prior_berger(i, lengths, context)
        assert standard.value == pytest.approx(berger.value, rel=1e-7)
        assert standard.trace_term == pytest.approx(berger.trace_term, rel=1e-7)


def test_mu_form_is_theta_form_times_theta_squared(plane_data):
    context, _ = plane_data
    lengths = LengthVector(theta=[0.3, 0.45])
    for i in range(2):
        in_theta = conditional_prior(i, lengths, context).value
        in_mu = conditional_prior(i, lengths, context, Parametrization.MU)
        assert in_mu.parametrization == Parametrization.MU
        assert in_mu.value == pytest.approx(in_theta * lengths.theta[i] ** 2, rel=1e-12)


@pytest.mark.parametrize("nu", [1.5, 2.5, 3.3])
@pytest.mark.parametrize("basis", [BasisKind.NONE, BasisKind.CONSTANT, BasisKind.AFFINE])
def test_conditional_prior_respects_upper_bound(make_context, rng, nu, basis):
    context = make_context(rng.random((12, 3)), nu=nu, basis=basis)
    bound = prior_upper_bound(context)
    for _ in range(5):
        lengths = LengthVector(theta=np.exp(rng.uniform(np.log(0.05), np.log(0.8), 3)))
        for i in range(3):
            value = conditional_prior(i, lengths, context).value
            assert lengths.theta[i] * value <= bound * (1 + 1e-9)


def test_strict_mode_raises_on_bound_violation(plane_data, monkeypatch):
    context, _ = plane_data
    too_large = 10 * prior_upper_bound(context)
    check_prior_bound(1.0, too_large, context)
    monkeypatch.setattr(settings, "strict_prior_bound", True)
    with pytest.raises(PriorBoundError):
        check_prior_bound(1.0, too_large, context)


def test_batch_log_prior_matches_single(plane_data):
    context, _ = plane_data
    thetas = np.array([[0.2, 0.3], [0.5, 0.5], [1.2, 0.15]])
    batch = context.batch(thetas)
    for i in range(2):
        logs = log_conditional_prior_batch(i, batch, context)
        single = [np.log(conditional_prior(i, LengthVector(theta=row), context).value) for row in thetas]
        np.testing.assert_allclose(logs, single, rtol=1e-8)


def test_log_prior_product_sums_conditionals(plane_data):
    context, _ = plane_data
    lengths = LengthVector(theta=[0.25, 0.6])
    expected = sum(np.log(conditional_prior(i, lengths, context).value) for i in range(2))
    assert log_prior_product(lengths, context) == pytest.approx(expected)


def test_envelope_is_frobenius_norm_of_mu_derivative(plane_data):
    context, _ = plane_data
    lengths = LengthVector(theta=[0.25, 0.6])
    deriv = corr_matrix_deriv_mu(context.design, lengths, 0, context.kernel)
    assert prior_envelope_h(0, lengths, context) == pytest.approx(np.linalg.norm(deriv))
    assert prior_envelope_h(0, LengthVector(theta=[0.001, 0.001]), context) < 1e-12


def test_sphere_quadratic_variance_matches_monte_carlo(rng):
    n = 5
    A = rng.standard_normal((n, n))
    M = A + A.T
    u = rng.standard_normal((200_000, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    forms = np.einsum("ki,ij,kj->k", u, M, u)
    expected = sphere_quadratic_variance(M) * 2 / (n * (n + 2))
    assert forms.var() == pytest.approx(expected, rel=0.02)


def test_sphere_quadratic_variance_rejects_non_symmetric():
    with pytest.raises(ValueError):
        sphere_quadratic_variance(np.array([[1.0, 2.0], [0.0, 1.0]]))
    assert sphere_quadratic_variance(np.eye(4)) == pytest.approx(0.0)
