import numpy as np
import pytest
from scipy import integrate, optimize, stats

from src.errors import KernelDomainError, KrigingError
from src.kernels.correlation import cross_corr_matrix
from src.linear_model.context import KrigingContext
from src.linear_model.marginal import beta_posterior, sigma2_posterior
from src.models.basis import ModelMatrices
from src.models.chain import ChainConfig, ChainDiagnostics, ChainOutput
from src.models.design import DesignSet, LengthVector
from src.models.enums import BasisKind
from src.models.predictive import KnownAll, Mixture, Student
from src.prediction.intervals import (
    marginal_cdf,
    marginal_quantile,
    point_prediction,
    prediction_interval,
    prediction_intervals,
)
from src.prediction.predictive import (
    predict_beta_marginal,
    predict_full_bayes,
    predict_known_all,
    predict_known_mean,
    predict_student,
)

THETA = [0.35, 0.5]


@pytest.fixture
def targets():
    return DesignSet(points=[[0.2, 0.2], [0.5, 0.9], [0.85, 0.4]])


@pytest.fixture
def affine_data(make_context, rng):
    context = make_context(rng.random((12, 2)), basis=BasisKind.AFFINE)
    y = 1.0 + context.design.points @ np.array([2.0, -1.0]) + 0.3 * rng.standard_normal(12)
    return context, y


def _universal_kriging(context, y, targets, theta):
    """Textbook Universal Kriging mean and σ²-free variance through Σ^-1."""
    lengths = LengthVector(theta=theta)
    state = context.state(lengths)
    S, H = state.sigma, context.H
    cross = cross_corr_matrix(context.design, targets, lengths, context.kernel)
    H0 = context.basis_at(targets)
    sinv_h = np.linalg.solve(S, H)
    gram = H.T @ sinv_h
    beta = np.linalg.solve(gram, sinv_h.T @ y)
    sinv_c = np.linalg.solve(S, cross.T)
    mean = H0 @ beta + cross @ np.linalg.solve(S, y - H @ beta)
    u = H0.T - H.T @ sinv_c
    var = 1.0 - np.sum(cross * sinv_c.T, axis=1) + np.sum(u * np.linalg.solve(gram, u), axis=0)
    return mean, var


def test_known_all_interpolates_the_design(plane_data):
    context, y = plane_data
    at_design = DesignSet(points=context.design.points[:3])
    dist = predict_known_all(at_design, y, [5.0], 1.3, [0.4, 0.6], context, marginal=True)
    np.testing.assert_allclose(dist.mean, y[:3], atol=1e-8)
    np.testing.assert_allclose(dist.marginal_variance(), 0.0, atol=1e-8)


def test_known_all_needs_matching_beta(plane_data, targets):
    context, y = plane_data
    with pytest.raises(KernelDomainError):
        predict_known_all(targets, y, [1.0, 2.0], 1.0, THETA, context)


def test_known_mean_matches_known_all(plane_data, targets):
    context, y = plane_data
    a = predict_known_all(targets, y, [5.0], 2.0, THETA, context)
    b = predict_known_mean(targets, y, np.full(12, 5.0), np.full(3, 5.0), 2.0, THETA, context)
    np.testing.assert_allclose(a.mean, b.mean)
    np.testing.assert_allclose(a.cov, b.cov)


def test_beta_marginal_matches_universal_kriging(affine_data, targets):
    context, y = affine_data
    mean, var = _universal_kriging(context, y, targets, THETA)
    dist = predict_beta_marginal(targets, y, 0.8, THETA, context)
    np.testing.assert_allclose(dist.mean, mean, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(np.diag(dist.cov), 0.8 * var, rtol=1e-7, atol=1e-12)
    marginal = predict_beta_marginal(targets, y, 0.8, THETA, context, marginal=True)
    np.testing.assert_allclose(marginal.cov, np.diag(dist.cov), rtol=1e-10, atol=1e-14)


def test_student_scale_is_variance_estimate_times_kriging_variance(affine_data, targets):
    context, y = affine_data
    state = context.state(THETA)
    m = context.matrices.m
    student = predict_student(targets, y, THETA, context)
    gaussian = predict_beta_marginal(targets, y, 1.0, THETA, context)
    assert student.dof == m
    np.testing.assert_allclose(student.location, gaussian.mean)
    np.testing.assert_allclose(student.scale, state.quadratic_form(y) / m * gaussian.cov, rtol=1e-10)


def test_simple_kriging_student_has_n_degrees_of_freedom(make_context, targets, rng):
    context = make_context(rng.random((10, 2)), basis=BasisKind.NONE)
    dist = predict_student(targets, rng.standard_normal(10), THETA, context, marginal=True)
    assert dist.dof == 10


def test_intervals_use_student_quantiles(affine_data, targets):
    context, y = affine_data
    dist = predict_student(targets, y, THETA, context, marginal=True)
    lo, hi = prediction_intervals(dist, 0.9)
    half = stats.t.ppf(0.95, dist.dof) * dist.marginal_scale()
    np.testing.assert_allclose(lo, dist.location - half)
    np.testing.assert_allclose(hi, dist.location + half)
    assert prediction_interval(dist, 1, 0.9) == pytest.approx((lo[1], hi[1]))


def test_gaussian_intervals_and_point_prediction():
    dist = KnownAll(mean=np.array([1.0, -2.0]), cov=np.array([4.0, 0.25]))
    lo, hi = prediction_intervals(dist, 0.95)
    z = stats.norm.ppf(0.975)
    np.testing.assert_allclose(lo, [1.0 - 2 * z, -2.0 - 0.5 * z])
    np.testing.assert_allclose(hi, [1.0 + 2 * z, -2.0 + 0.5 * z])
    np.testing.assert_allclose(point_prediction(dist), [1.0, -2.0])


@pytest.mark.parametrize("level", [0.0, 1.0, -0.5, 1.5])
def test_level_must_be_a_probability(level):
    dist = KnownAll(mean=np.zeros(1), cov=np.ones(1))
    with pytest.raises(KernelDomainError):
        prediction_intervals(dist, level)


def _student(loc, scale, dof=5):
    return Student(location=np.array([loc]), scale=np.array([scale]), dof=dof)


def test_single_component_mixture_equals_its_component():
    component = _student(0.4, 2.0)
    mixture = Mixture(components=[component])
    np.testing.assert_allclose(prediction_intervals(mixture, 0.8), prediction_intervals(component, 0.8))


def test_mixture_quantile_inverts_mixture_cdf():
    mixture = Mixture(components=[_student(-1.0, 0.5), _student(2.0, 1.5, dof=3), _student(0.0, 0.1)])
    for prob in (0.05, 0.3, 0.5, 0.975):
        x = marginal_quantile(mixture, 0, prob)
        assert marginal_cdf(mixture, 0, x) == pytest.approx(prob, abs=1e-9)
        comps = [c.location[0] + np.sqrt(c.scale[0]) * stats.t.ppf(prob, c.dof) for c in mixture.components]
        assert min(comps) - 1e-9 <= x <= max(comps) + 1e-9
    assert mixture.weights == pytest.approx([1 / 3] * 3)


def test_degenerate_component_is_a_point_mass():
    dist = Student(location=np.array([3.0]), scale=np.array([0.0]), dof=4)
    assert marginal_cdf(dist, 0, 2.999) == 0.0
    assert marginal_cdf(dist, 0, 3.0) == 1.0


def _chain(rows: np.ndarray) -> ChainOutput:
    r = rows.shape[1] if rows.ndim == 2 else 0
    return ChainOutput(
        theta=rows,
        log_l1=np.zeros(rows.shape[0]),
        update_counts=[0] * r,
        diagnostics=ChainDiagnostics(ess=[], split_rhat=[]),
        config=ChainConfig(n_iter=2, burn_in=0),
    )


def test_full_bayes_is_a_mixture_over_chain_samples(plane_data, targets):
    context, y = plane_data
    rows = np.array([[0.3, 0.5], [0.4, 0.4], [0.6, 0.2], [0.35, 0.45]])
    mixture = predict_full_bayes(targets, y, _chain(rows), context, marginal=True)
    assert len(mixture.components) == 4
    first = predict_student(targets, y, rows[0], context, marginal=True)
    np.testing.assert_allclose(mixture.components[0].location, first.location)

    capped = predict_full_bayes(targets, y, _chain(rows), context, marginal=True, max_components=2)
    assert len(capped.components) == 2


def test_full_bayes_needs_samples(plane_data, targets):
    context, y = plane_data
    with pytest.raises(KrigingError):
        predict_full_bayes(targets, y, _chain(np.zeros((0, 2))), context)


def test_student_is_the_gaussian_mixed_over_the_variance_posterior(affine_data, targets):
    context, y = affine_data
    gaussian = predict_beta_marginal(targets, y, 1.0, THETA, context, marginal=True)
    student = predict_student(targets, y, THETA, context, marginal=True)
    posterior = sigma2_posterior(y, context.state(THETA))
    precision = stats.gamma(posterior.shape, scale=1.0 / posterior.rate)
    top = precision.ppf(1.0 - 1e-12)

    for t in range(targets.n):
        loc, c = gaussian.mean[t], gaussian.cov[t]

        def cdf(x: float) -> float:
            def integrand(tau: float) -> float:
                return precision.pdf(tau) * stats.norm.cdf((x - loc) * np.sqrt(tau / c))

            value, _ = integrate.quad(integrand, 0.0, top, limit=200, epsabs=1e-12)
            return value

        spread = 50.0 * np.sqrt(c * posterior.rate / posterior.shape)
        for prob in (0.05, 0.5, 0.9):
            expected = optimize.brentq(lambda x: cdf(x) - prob, loc - spread, loc + spread, xtol=1e-12)
            assert marginal_quantile(student, t, prob) == pytest.approx(expected, rel=1e-6, abs=1e-8)


def test_unknown_trend_only_adds_variance(affine_data, targets):
    context, y = affine_data
    known = predict_known_all(targets, y, [1.0, 2.0, -1.0], 0.8, THETA, context)
    unknown = predict_beta_marginal(targets, y, 0.8, THETA, context)
    gap = unknown.cov - known.cov
    assert np.linalg.eigvalsh(gap).min() >= -1e-10
    assert np.trace(gap) > 0


def test_intervals_are_nested_across_levels(plane_data, targets):
    context, y = plane_data
    rows = np.array([[0.3, 0.5], [0.4, 0.4], [0.6, 0.2]])
    for dist in (
        predict_student(targets, y, THETA, context, marginal=True),
        predict_full_bayes(targets, y, _chain(rows), context, marginal=True),
    ):
        bounds = [prediction_intervals(dist, level) for level in (0.5, 0.8, 0.95)]
        for (lo_in, hi_in), (lo_out, hi_out) in zip(bounds, bounds[1:]):
            assert np.all(lo_out < lo_in)
            assert np.all(hi_in < hi_out)


def test_student_is_affine_equivariant(affine_data, targets):
    context, y = affine_data
    a, b = -2.5, np.array([1.0, 0.5, -3.0])
    moved = a * y + context.H @ b
    before = predict_student(targets, y, THETA, context)
    after = predict_student(targets, moved, THETA, context)
    assert after.dof == before.dof
    np.testing.assert_allclose(after.location, a * before.location + context.basis_at(targets) @ b, rtol=1e-8)
    np.testing.assert_allclose(after.scale, a**2 * before.scale, rtol=1e-8)
    m = context.matrices.m
    assert context.log_integrated_likelihood(moved, THETA) == pytest.approx(
        context.log_integrated_likelihood(y, THETA) - m * np.log(abs(a))
    )


def test_results_do_not_depend_on_the_orthonormal_bases(affine_data, targets, rng):
    context, y = affine_data
    mm = context.matrices
    spin_p, _ = np.linalg.qr(rng.standard_normal((mm.p, mm.p)))
    spin_w, _ = np.linalg.qr(rng.standard_normal((mm.m, mm.m)))
    rotated = KrigingContext(context.design, context.kernel, context.basis)
    rotated.matrices = ModelMatrices(H=mm.H, P=mm.P @ spin_p, W=mm.W @ spin_w)

    assert rotated.log_integrated_likelihood(y, THETA) == pytest.approx(context.log_integrated_likelihood(y, THETA))
    a = predict_student(targets, y, THETA, context)
    b = predict_student(targets, y, THETA, rotated)
    np.testing.assert_allclose(b.location, a.location, rtol=1e-8)
    np.testing.assert_allclose(b.scale, a.scale, rtol=1e-7, atol=1e-12)


def test_beta_marginal_composes_the_trend_posterior(affine_data, targets):
    context, y = affine_data
    sigma2 = 0.8
    posterior = beta_posterior(y, sigma2, context.state(THETA))
    conditional = [predict_known_all(targets, y, e, sigma2, THETA, context) for e in np.eye(context.p)]
    origin = predict_known_all(targets, y, np.zeros(context.p), sigma2, THETA, context)
    slope = np.column_stack([c.mean for c in conditional]) - origin.mean[:, None]

    draws = 40_000
    gen = np.random.default_rng(99)
    betas = gen.multivariate_normal(posterior.mean, posterior.covariance, size=draws)
    noise = gen.multivariate_normal(np.zeros(targets.n), origin.cov, size=draws)
    y0 = origin.mean + betas @ slope.T + noise

    expected = predict_beta_marginal(targets, y, sigma2, THETA, context)
    sd = np.sqrt(np.diag(expected.cov))
    np.testing.assert_allclose(y0.mean(axis=0), expected.mean, atol=float(5 * sd.max() / np.sqrt(draws)))
    np.testing.assert_allclose(np.cov(y0.T), expected.cov, rtol=0.05, atol=0.03 * float(sd.max() ** 2))
