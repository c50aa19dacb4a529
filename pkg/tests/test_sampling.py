import numpy as np
import pytest
from pydantic import ValidationError
from scipy import integrate, stats

from src.errors import KernelDomainError
from src.models.chain import ChainConfig
from src.models.design import LengthVector
from src.reference_prior.prior import prior_1d
from src.sampling.diagnostics import (
    autocorrelation,
    effective_sample_size,
    monte_carlo_standard_error,
    split_rhat,
)
from src.sampling.gibbs_sampler import (
    GibbsSampler,
    conditional_posterior_grid,
    gibbs_step,
    log_conditional_density,
    run_chain,
)


def test_ess_of_independent_draws(rng):
    x = rng.standard_normal(4000)
    assert 0.7 * x.size < effective_sample_size(x) < 1.3 * x.size


def test_ess_of_autoregressive_chain(rng):
    phi, n = 0.9, 20_000
    x = np.empty(n)
    x[0] = rng.standard_normal()
    noise = rng.standard_normal(n)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + noise[t]
    expected = n * (1 - phi) / (1 + phi)
    assert 0.7 * expected < effective_sample_size(x) < 1.3 * expected


def test_autocorrelation_starts_at_one(rng):
    rho = autocorrelation(rng.standard_normal(500))
    assert rho[0] == pytest.approx(1.0)
    assert np.all(np.abs(rho[1:20]) < 0.2)


def test_split_rhat(rng):
    assert split_rhat(rng.standard_normal(4000)) < 1.01
    trend = np.linspace(0.0, 1.0, 1000) + 0.05 * rng.standard_normal(1000)
    assert split_rhat(trend) > 1.1


def test_standard_error_of_independent_draws(rng):
    x = rng.standard_normal(4000)
    assert monte_carlo_standard_error(x) == pytest.approx(1 / np.sqrt(4000), rel=0.2)
    assert monte_carlo_standard_error(np.full(50, 0.3)) == pytest.approx(0.0, abs=1e-12)


def test_chain_config_validation():
    with pytest.raises(ValidationError):
        ChainConfig(n_iter=100, burn_in=100)
    with pytest.raises(ValidationError):
        ChainConfig(n_iter=100, burn_in=10, truncation=(1.0, 0.5))
    assert ChainConfig(n_iter=100, burn_in=10, thin=3).n_retained == 30


def test_grid_cdf_is_a_distribution_function(line_data):
    context, y = line_data
    grid = conditional_posterior_grid(0, LengthVector(theta=[0.3]), y, context)
    assert grid.cdf[0] == 0.0
    assert grid.cdf[-1] == 1.0
    assert np.all(np.diff(grid.cdf) >= 0)
    assert np.trapezoid(grid.density(), grid.log_theta) == pytest.approx(1.0)
    lo, hi = grid.bounds
    assert lo < grid.mean() < hi


def test_grid_does_not_depend_on_the_moving_coordinate(line_data):
    context, y = line_data
    a = conditional_posterior_grid(0, LengthVector(theta=[0.1]), y, context)
    b = conditional_posterior_grid(0, LengthVector(theta=[2.0]), y, context)
    np.testing.assert_allclose(a.cdf, b.cdf)


def test_log_density_adds_jacobian(line_data):
    context, y = line_data
    u = np.log(np.array([0.1, 0.3, 0.9]))
    expected = [
        context.log_integrated_likelihood(y, [t]) + np.log(prior_1d(t, context)) + np.log(t)
        for t in np.exp(u)
    ]
    got = log_conditional_density(0, LengthVector(theta=[0.3]), u, y, context)
    np.testing.assert_allclose(got, expected, rtol=1e-8)


def test_grid_quantiles_match_independent_quadrature(line_data):
    context, y = line_data
    grid = conditional_posterior_grid(0, LengthVector(theta=[0.3]), y, context)
    lo, hi = grid.bounds
    peak = np.log(prior_1d(0.3, context)) + context.log_integrated_likelihood(y, [0.3])

    def posterior(theta: float) -> float:
        return np.exp(context.log_integrated_likelihood(y, [theta]) + np.log(prior_1d(theta, context)) - peak)

    total, _ = integrate.quad(posterior, lo, hi, limit=400)
    for prob in (0.1, 0.5, 0.9):
        q = float(grid.quantile(prob))
        mass, _ = integrate.quad(posterior, lo, q, limit=400)
        assert mass / total == pytest.approx(prob, rel=1e-2)


def test_one_dimensional_chain_draws_from_the_grid(line_data):
    context, y = line_data
    config = ChainConfig(n_iter=2000, burn_in=0, seed=7)
    chain = GibbsSampler(context, y, config).run()
    grid = conditional_posterior_grid(0, LengthVector(theta=[0.3]), y, context, config.grid_size)
    result = stats.kstest(np.log(chain.theta[:, 0]), lambda u: np.interp(u, grid.log_theta, grid.cdf))
    assert result.pvalue > 1e-3
    assert chain.diagnostics.grid_builds == 1


def test_chain_is_reproducible(plane_data):
    context, y = plane_data
    config = ChainConfig(n_iter=30, burn_in=5, seed=11, grid_size=64)
    first = run_chain(y, context, config)
    second = run_chain(y, context, config)
    np.testing.assert_array_equal(first.theta, second.theta)
    assert len(first) == 25
    assert sum(first.update_counts) == 30 * 2
    np.testing.assert_allclose(
        first.log_l1, [context.log_integrated_likelihood(y, row) for row in first.theta]
    )


def test_single_step_moves_one_coordinate(plane_data):
    context, y = plane_data
    start = LengthVector(theta=[0.3, 0.5])
    moved = gibbs_step(start, y, np.random.default_rng(0), context, ChainConfig(grid_size=64))
    assert np.sum(moved.theta != start.theta) == 1


def test_sampler_rejects_wrong_observation_count(plane_data):
    context, y = plane_data
    with pytest.raises(KernelDomainError):
        GibbsSampler(context, y[:-1])
    with pytest.raises(KernelDomainError):
        GibbsSampler(context, y, ChainConfig(init=LengthVector(theta=[1.0]))).run()


@pytest.mark.slow
def test_two_dimensional_chain_mixes(plane_data):
    context, y = plane_data
    chain = run_chain(y, context, ChainConfig(n_iter=1500, burn_in=300, seed=5))
    assert np.all(np.array(chain.diagnostics.split_rhat) < 1.1)
    assert min(chain.diagnostics.ess) > 50


@pytest.mark.slow
def test_chains_from_distant_starts_agree(plane_data):
    context, y = plane_data
    low = run_chain(y, context, ChainConfig(n_iter=2500, burn_in=500, seed=6, init=LengthVector(theta=[0.05, 0.05])))
    high = run_chain(y, context, ChainConfig(n_iter=2500, burn_in=500, seed=7, init=LengthVector(theta=[3.0, 3.0])))
    for chain in (low, high):
        expected = [monte_carlo_standard_error(chain.theta[:, j]) for j in range(2)]
        np.testing.assert_allclose(chain.diagnostics.mcse, expected)
    log_low, log_high = np.log(low.theta), np.log(high.theta)
    for j in range(2):
        se = np.hypot(monte_carlo_standard_error(log_low[:, j]), monte_carlo_standard_error(log_high[:, j]))
        assert abs(log_low[:, j].mean() - log_high[:, j].mean()) < 3 * se


@pytest.mark.slow
def test_one_sweep_preserves_the_chain_distribution(cube_data):
    context, y = cube_data
    config = ChainConfig(n_iter=1000, burn_in=200, thin=4, seed=13, grid_size=64)
    chain = run_chain(y, context, config)
    sampler = GibbsSampler(context, y, config)
    rng = np.random.default_rng(14)
    moved = np.empty_like(chain.theta)
    for k, row in enumerate(chain.theta):
        point = LengthVector(theta=row)
        for _ in range(context.r):
            point, _ = sampler.step(point, rng)
        moved[k] = point.theta
    assert np.any(moved != chain.theta)
    for j in range(context.r):
        result = stats.ks_2samp(np.log(chain.theta[:, j]), np.log(moved[:, j]))
        assert result.pvalue > 1e-3


@pytest.mark.slow
def test_random_scan_picks_coordinates_uniformly(cube_data):
    context, y = cube_data
    chain = run_chain(y, context, ChainConfig(n_iter=400, burn_in=0, seed=21, grid_size=64))
    counts = np.array(chain.update_counts)
    assert counts.sum() == 400 * 3
    assert stats.chisquare(counts).pvalue > 1e-3
