import numpy as np
import pytest

from nonbayes import Belief, bayes_posterior, posterior_system, realization_marginal, validate_environment
from nonbayes import errors
from nonbayes.belief import _bayes_formula, require_affine_independence


def test_binary_environment_is_valid(binary_env):
    assert binary_env.n == 2 and binary_env.m == 2
    assert binary_env.labels == ("H", "L")


def test_zero_support_prior_rejected():
    with pytest.raises(errors.ZeroSupportPrior):
        validate_environment([1.0, 0.0], [[0.8, 0.2], [0.2, 0.8]])


def test_column_that_is_not_a_distribution_rejected():
    with pytest.raises(errors.RowNotDistribution):
        validate_environment([0.5, 0.5], [[0.8, 0.2], [0.8, 0.8]])


def test_prior_off_simplex_rejected():
    with pytest.raises(errors.NonSimplexPrior):
        validate_environment([0.6, 0.6], [[0.8, 0.2], [0.2, 0.8]])


def test_zero_probability_realization_rejected():
    with pytest.raises(errors.ZeroProbabilityRealization):
        validate_environment([0.5, 0.5], [[1.0, 1.0], [0.0, 0.0]])


def test_dimension_mismatch_rejected():
    with pytest.raises(errors.DimensionMismatch):
        validate_environment([0.5, 0.5], [[0.5, 0.2, 0.3], [0.5, 0.8, 0.7]])


def test_errors_are_value_errors():
    assert issubclass(errors.ZeroSupportPrior, ValueError)


def test_bayes_posterior_binary(binary_env):
    np.testing.assert_allclose(bayes_posterior(binary_env, "H").probs, [0.8, 0.2], atol=1e-15)
    np.testing.assert_allclose(bayes_posterior(binary_env, 1).probs, [0.2, 0.8], atol=1e-15)


def test_uninformative_signal_returns_prior():
    env = validate_environment([0.3, 0.7], [[0.4, 0.4], [0.6, 0.6]])
    for s in range(2):
        np.testing.assert_allclose(bayes_posterior(env, s).probs, env.mu, atol=1e-15)


def test_fully_revealing_realization():
    env = validate_environment([0.3, 0.7], [[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(bayes_posterior(env, 0).probs, [1.0, 0.0])


def test_marginals(binary_env):
    assert realization_marginal(binary_env, "H") == pytest.approx(0.5, abs=1e-15)
    ident = validate_environment([0.2, 0.3, 0.5], np.eye(3))
    for s in range(3):
        assert realization_marginal(ident, s) == pytest.approx(ident.mu[s])
    uni = validate_environment(np.ones(3) / 3, np.full((3, 3), 1 / 3))
    assert realization_marginal(uni, 2) == pytest.approx(1 / 3)


def test_posterior_system_binary(binary_env):
    ps = posterior_system(binary_env)
    np.testing.assert_allclose(ps.marginals, [0.5, 0.5])
    np.testing.assert_allclose(ps.as_array(), [[0.8, 0.2], [0.2, 0.8]])
    assert ps.affinely_independent
    np.testing.assert_allclose(ps.marginals @ ps.as_array(), binary_env.mu, atol=1e-10)


def test_duplicated_posteriors_not_independent():
    env = validate_environment([0.2, 0.3, 0.5], [[0.3, 0.3, 0.1], [0.3, 0.3, 0.1], [0.4, 0.4, 0.8]])
    assert not posterior_system(env).affinely_independent
    with pytest.raises(errors.AffineDependence):
        require_affine_independence(env)


def test_formula_is_scale_invariant():
    prior = np.array([0.2, 0.5, 0.3])
    row = np.array([0.1, 0.4, 0.7])
    np.testing.assert_allclose(_bayes_formula(prior, row), _bayes_formula(prior, 37.0 * row), atol=1e-15)


def test_state_permutation_permutes_posteriors(three_state_env):
    perm = [2, 0, 1]
    env = three_state_env
    L = env.signal.likelihoods
    permuted = validate_environment(env.mu[perm], L[:, perm])
    np.testing.assert_allclose(permuted.posteriors, env.posteriors[:, perm], atol=1e-15)


def test_label_lookup(binary_env):
    assert binary_env.index("L") == 1
    with pytest.raises(errors.MissingRealization):
        binary_env.index("X")


def test_belief_validation():
    with pytest.raises(errors.ModelError):
        Belief([0.5])
    with pytest.raises(errors.ModelError):
        Belief([1.2, -0.2])
    b = Belief([0.25, 0.75])
    assert b == Belief([0.25, 0.75]) and hash(b) == hash(Belief([0.25, 0.75]))
    assert np.asarray(b).shape == (2,)
