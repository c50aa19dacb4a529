import numpy as np
import pytest
from scipy import integrate, stats

from src.errors import DegenerateObservationError, IdentifiabilityError, KernelDomainError
from src.linear_model.basis import build_basis_matrix, orthonormal_split
from src.linear_model.marginal import (
    beta_posterior,
    integrated_likelihood_L0,
    integrated_likelihood_L1,
    projector_Q,
    sigma2_posterior,
)
from src.models.basis import TrendBasis
from src.models.design import DesignSet, LengthVector
from src.models.enums import BasisKind

ORACLE_Y = np.array([0.3, -0.2, 0.5, 1.1])


@pytest.mark.parametrize("kind", [BasisKind.CONSTANT, BasisKind.AFFINE])
def test_orthonormal_split(rng, kind):
    design = DesignSet(points=rng.random((10, 2)))
    mm = orthonormal_split(build_basis_matrix(TrendBasis(kind=kind), design))
    p = mm.p
    np.testing.assert_allclose(mm.P.T @ mm.P, np.eye(p), atol=1e-12)
    np.testing.assert_allclose(mm.W.T @ mm.W, np.eye(10 - p), atol=1e-12)
    np.testing.assert_allclose(mm.W.T @ mm.H, 0.0, atol=1e-12)
    np.testing.assert_allclose(mm.P @ mm.P.T + mm.W @ mm.W.T, np.eye(10), atol=1e-12)


def test_simple_kriging_split_is_trivial(line_design):
    mm = orthonormal_split(build_basis_matrix(TrendBasis(kind=BasisKind.NONE), line_design))
    assert mm.p == 0
    np.testing.assert_allclose(mm.W, np.eye(4))


def test_too_few_points_for_the_basis():
    design = DesignSet(points=[[0.1, 0.2], [0.5, 0.9], [0.7, 0.3]])
    with pytest.raises(IdentifiabilityError):
        build_basis_matrix(TrendBasis(kind=BasisKind.AFFINE), design)


def test_rank_deficient_basis(line_design):
    basis = TrendBasis(kind=BasisKind.CUSTOM, functions=[lambda x: 1.0, lambda x: 2.0])
    with pytest.raises(IdentifiabilityError):
        build_basis_matrix(basis, line_design)


def test_custom_basis_needs_functions():
    with pytest.raises(ValueError):
        TrendBasis(kind=BasisKind.CUSTOM)


def test_projected_inverse_equals_sigma_inverse_times_projector(make_context, rng):
    context = make_context(rng.random((9, 2)), basis=BasisKind.AFFINE)
    state = context.state([0.5, 0.8])
    W = context.matrices.W
    lhs = W @ np.linalg.solve(state.projected, W.T)
    Q = projector_Q(state)
    np.testing.assert_allclose(lhs, np.linalg.solve(state.sigma, Q), atol=1e-9)
    np.testing.assert_allclose(Q @ context.H, 0.0, atol=1e-10)
    np.testing.assert_allclose(Q @ Q, Q, atol=1e-10)


def test_integrated_likelihood_ignores_the_trend(make_context, rng):
    context = make_context(rng.random((9, 2)), basis=BasisKind.AFFINE)
    y = rng.standard_normal(9)
    state = context.state([0.5, 0.8])
    shifted = y + context.H @ np.array([3.0, -2.0, 7.5])
    assert integrated_likelihood_L1(shifted, state) == pytest.approx(integrated_likelihood_L1(y, state))


@pytest.mark.parametrize("c", [0.1, -3.0, 25.0])
def test_integrated_likelihood_scaling(make_context, rng, c):
    context = make_context(rng.random((9, 2)))
    y = rng.standard_normal(9)
    state = context.state([0.5, 0.8])
    m = context.matrices.m
    expected = integrated_likelihood_L1(y, state) - m * np.log(abs(c))
    assert integrated_likelihood_L1(c * y, state) == pytest.approx(expected, rel=1e-10)


@pytest.fixture
def oracle_state(make_context, line_design):
    context = make_context(line_design.points)
    return context, context.state([0.3])


def test_beta_marginal_likelihood_against_quadrature(oracle_state):
    context, state = oracle_state
    sigma2 = 0.7
    cov = sigma2 * state.sigma
    h = context.H[:, 0]
    sinv_h = np.linalg.solve(state.sigma, h)
    gls = float(sinv_h @ ORACLE_Y / (sinv_h @ h))
    sd = np.sqrt(sigma2 / (sinv_h @ h))

    def integrand(beta: float) -> float:
        return stats.multivariate_normal.pdf(ORACLE_Y, mean=beta * h, cov=cov)

    value, _ = integrate.quad(integrand, gls - 40 * sd, gls + 40 * sd, points=[gls], limit=200)
    assert np.log(value) == pytest.approx(integrated_likelihood_L0(ORACLE_Y, sigma2, state), rel=1e-6)


def test_variance_marginal_likelihood_against_quadrature(oracle_state):
    context, state = oracle_state
    m = context.matrices.m
    centre = np.log(state.quadratic_form(ORACLE_Y) / m)

    def integrand(s: float) -> float:
        # dσ²/σ² = ds with s = log σ²
        return np.exp(integrated_likelihood_L0(ORACLE_Y, np.exp(s), state))

    value, _ = integrate.quad(integrand, centre - 30, centre + 30, points=[centre], limit=200)
    assert np.log(value) == pytest.approx(integrated_likelihood_L1(ORACLE_Y, state), rel=1e-6)


def test_beta_posterior_is_generalised_least_squares(make_context, rng):
    context = make_context(rng.random((11, 2)), basis=BasisKind.AFFINE)
    y = rng.standard_normal(11)
    state = context.state([0.6, 0.4])
    H = context.H
    sinv_h = np.linalg.solve(state.sigma, H)
    gram = H.T @ sinv_h
    post = beta_posterior(y, 2.0, state)
    np.testing.assert_allclose(post.mean, np.linalg.solve(gram, sinv_h.T @ y), rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(post.covariance, 2.0 * np.linalg.inv(gram), rtol=1e-8, atol=1e-10)


def test_sigma2_posterior(oracle_state):
    context, state = oracle_state
    post = sigma2_posterior(ORACLE_Y, state)
    assert post.shape == pytest.approx(context.matrices.m / 2)
    assert post.rate == pytest.approx(state.quadratic_form(ORACLE_Y) / 2)
    with pytest.raises(KernelDomainError):
        integrated_likelihood_L0(ORACLE_Y, 0.0, state)


def test_observations_in_span_of_trend_are_degenerate(oracle_state):
    _, state = oracle_state
    with pytest.raises(DegenerateObservationError):
        integrated_likelihood_L1(np.full(4, 2.5), state)


def test_batch_likelihood_matches_single(plane_data):
    context, y = plane_data
    thetas = np.array([[0.2, 0.3], [0.5, 0.5], [1.5, 0.1]])
    batch = context.log_integrated_likelihood_batch(y, thetas)
    single = [context.log_integrated_likelihood(y, row) for row in thetas]
    np.testing.assert_allclose(batch, single, rtol=1e-9)


def test_states_are_cached(plane_data):
    context, _ = plane_data
    assert context.state([0.3, 0.4]) is context.state(LengthVector(theta=[0.3, 0.4]))
    assert context.state([0.3, 0.4]) is not context.state([0.3, 0.41])
