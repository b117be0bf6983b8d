import numpy as np
import pytest

from nonbayes import (
    Bayesian,
    Belief,
    ConfirmatoryBias,
    ExtremeBeliefAversion,
    GretherTwoState,
    MisspecifiedPrior,
    PowerDistortion,
    RandomRule,
    Shrink,
    Stretch,
    Tabulated,
    apply_deterministic,
    apply_random,
    classify_reaction,
    systematic_consistency_check,
    underreacts_to_information,
    validate_environment,
)
from nonbayes import errors
from nonbayes.rules import (
    builtin_systematic_survey,
    classify_rule,
    grether_two_state,
    overreacts_to_information,
    power_distort,
)


def test_grether_identity_at_one(binary_env):
    for s in range(2):
        np.testing.assert_allclose(apply_deterministic(GretherTwoState(1.0), binary_env, s).probs,
                                   binary_env.posteriors[s], atol=1e-15)


def test_grether_beta_two(binary_env):
    y = apply_deterministic(GretherTwoState(2.0), binary_env, "H")
    assert y[0] == pytest.approx(16 / 17, abs=1e-12)
    assert y[0] == pytest.approx(0.9411765, abs=1e-7)


def test_grether_needs_two_states(three_state_env):
    with pytest.raises(errors.DimensionMismatch):
        GretherTwoState(2.0).apply(three_state_env, 0)


def test_grether_general_prior_uses_power():
    env = validate_environment([0.7, 0.3], [[0.6, 0.3], [0.4, 0.7]])
    for s in range(2):
        np.testing.assert_allclose(GretherTwoState(3.0).apply(env, s).probs,
                                   PowerDistortion(3.0).apply(env, s).probs, atol=1e-15)


def test_grether_closed_form_matches_power():
    rng = np.random.default_rng(1)
    for x in rng.uniform(0.01, 0.99, 50):
        for beta in (0.25, 0.5, 2.0, 4.0):
            assert grether_two_state(x, beta) == pytest.approx(power_distort(np.array([x, 1 - x]), beta)[0], abs=1e-12)


def test_shrink_full_returns_prior(three_state_env):
    for s in range(3):
        np.testing.assert_allclose(Shrink(1.0).apply(three_state_env, s).probs, three_state_env.mu, atol=1e-15)


def test_stretch_zero_is_bayesian(three_state_env):
    np.testing.assert_allclose(Stretch(0.0).posteriors(three_state_env), three_state_env.posteriors, atol=1e-15)


def test_stretch_overshoot_is_error(binary_env):
    with pytest.raises(errors.LeftSimplex):
        Stretch(5.0).apply(binary_env, 0)


def test_rule_parameter_ranges():
    with pytest.raises(errors.RuleDomainError):
        Shrink(1.5)
    with pytest.raises(errors.RuleDomainError):
        Stretch(-0.1)
    with pytest.raises(errors.RuleDomainError):
        PowerDistortion(-1.0)
    with pytest.raises(errors.RuleDomainError):
        ExtremeBeliefAversion(0.0)


def test_misspecified_prior(binary_env):
    rule = MisspecifiedPrior(Belief([0.8, 0.2]))
    y = rule.apply(binary_env, "H")
    assert y[0] == pytest.approx(0.64 / 0.68, abs=1e-12)
    np.testing.assert_allclose(MisspecifiedPrior(Belief([0.5, 0.5])).posteriors(binary_env),
                               binary_env.posteriors, atol=1e-15)


def test_misspecified_prior_overreacts_to_one_realization(binary_env):
    tags = [r.tag for r in classify_rule(binary_env, MisspecifiedPrior(Belief([0.8, 0.2])))]
    assert sorted(tags) == ["Over", "Under"]


def test_extreme_belief_aversion(three_state_env):
    eps = 0.25
    rule = ExtremeBeliefAversion(eps)
    ys = rule.posteriors(three_state_env)
    assert np.all(ys >= eps - 1e-12)
    assert underreacts_to_information(three_state_env, rule)
    # minimal: some coordinate sits exactly on the cap where a shrink was needed
    for s in range(3):
        if np.any(three_state_env.posteriors[s] < eps):
            assert np.min(ys[s]) == pytest.approx(eps, abs=1e-12)


def test_extreme_belief_aversion_domain(three_state_env):
    with pytest.raises(errors.RuleDomainError):
        ExtremeBeliefAversion(0.4).apply(three_state_env, 0)
    env = validate_environment([0.95, 0.05], [[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(errors.RuleDomainError):
        ExtremeBeliefAversion(0.1).apply(env, 0)


def test_confirmatory_no_misreading_is_degenerate(binary_env):
    for s in range(2):
        dist = apply_random(ConfirmatoryBias((1.0, 1.0)), binary_env, s)
        assert len(dist) == 1
        np.testing.assert_allclose(dist[0][0].probs, binary_env.posteriors[s])
        assert dist[0][1] == 1.0


def test_confirmatory_binary_misread_low():
    env = validate_environment([0.6, 0.4], [[0.7, 0.3], [0.3, 0.7]], ["H", "L"])
    dist = apply_random(ConfirmatoryBias((1.0, 0.7)), env, "L")
    (yl, pl), (yh, ph) = dist
    np.testing.assert_allclose(yl.probs, env.posteriors[1])
    np.testing.assert_allclose(yh.probs, env.posteriors[0])
    assert (pl, ph) == pytest.approx((0.7, 0.3))


def test_confirmatory_support_is_bayesian(three_state_env):
    rr = ConfirmatoryBias((0.2, 0.5, 0.9)).compile(three_state_env)
    X = three_state_env.posteriors
    for pairs in rr.support:
        for y, _ in pairs:
            assert np.min(np.max(np.abs(X - y.probs), axis=1)) <= 1e-15


def test_random_rule_requires_distribution():
    with pytest.raises(errors.ModelError):
        RandomRule((((Belief([0.5, 0.5]), 0.5), (Belief([0.6, 0.4]), 0.6)),))
    with pytest.raises(errors.ModelError):
        RandomRule(((),))


def test_random_rule_missing_realization(binary_env):
    rr = RandomRule((((Belief([0.5, 0.5]), 1.0),),))
    with pytest.raises(errors.MissingRealization):
        apply_random(rr, binary_env, "L")


def test_random_rule_sampling_uses_caller_stream(binary_env):
    rr = RandomRule((((Belief([0.5, 0.5]), 0.5), (Belief([0.6, 0.4]), 0.5)),) * 2)
    a = [rr.sample(binary_env, 0, np.random.default_rng(5)) for _ in range(3)]
    b = [rr.sample(binary_env, 0, np.random.default_rng(5)) for _ in range(3)]
    assert a == b


def test_classify_under(binary_env):
    r = classify_reaction(binary_env, [0.65, 0.35], "H")
    assert r.tag == "Under" and r.lam == pytest.approx(0.5, abs=1e-12)


def test_classify_over(binary_env):
    r = classify_reaction(binary_env, [0.95, 0.05], "H")
    assert r.tag == "Over" and r.lam == pytest.approx(1 / 3, abs=1e-12)


def test_classify_skips_prior(binary_env):
    r = classify_reaction(binary_env, [0.2, 0.8], "H")
    assert r.tag == "SkipsPrior" and r.lam == pytest.approx(2.0, abs=1e-12)


def test_classify_bayesian_and_degenerate():
    env = validate_environment([0.3, 0.7], [[0.5, 0.5], [0.5, 0.5]])
    assert classify_reaction(env, env.mu, 0).tag == "Bayesian"
    assert classify_reaction(env, [0.6, 0.4], 0).tag == "Degenerate"


def test_classify_off_line(three_state_env):
    X = three_state_env.posteriors
    outside = 1.3 * X[0] - 0.3 * X[1]
    assert classify_reaction(three_state_env, outside / outside.sum(), 0).tag == "OutsideHull"
    inside = (X[0] + X[1] + X[2]) / 3 * 0.5 + 0.5 * X[1]
    assert classify_reaction(three_state_env, inside, 0).tag == "Unclassified"


def test_shrink_recovers_lambda(three_state_env):
    lam = (0.1, 0.55, 0.9)
    for s, r in enumerate(classify_rule(three_state_env, Shrink(lam))):
        assert r.tag == "Under" and r.lam == pytest.approx(lam[s], abs=1e-8)


def test_underreaction_predicates(binary_env):
    assert underreacts_to_information(binary_env, Shrink((0.2, 0.7)))
    assert not underreacts_to_information(binary_env, Stretch((0.5, 0.0)))
    assert underreacts_to_information(binary_env, GretherTwoState(0.5))
    assert overreacts_to_information(binary_env, GretherTwoState(2.0))


def test_tabulated_checks_shape(binary_env):
    with pytest.raises(errors.DimensionMismatch):
        Tabulated((Belief([0.5, 0.5]),)).posteriors(binary_env)


def test_power_rule_is_systematic():
    assert systematic_consistency_check(PowerDistortion(2.0), 100, 0).systematic


def test_bayesian_rule_is_systematic():
    assert systematic_consistency_check(Bayesian(), 50, 3).systematic


def test_shrink_rule_is_not_systematic():
    rep = systematic_consistency_check(Shrink(0.5), 20, 1)
    assert not rep.systematic and rep.max_discrepancy > 1e-3


def test_builtin_survey():
    survey = builtin_systematic_survey(trials=30, seed=0)
    assert survey["power"].systematic and survey["grether2"].systematic and survey["bayesian"].systematic
    assert not survey["shrink"].systematic and not survey["misspecified_prior"].systematic


def test_rule_outputs_are_beliefs(three_state_env):
    rules = [Bayesian(), Shrink(0.3), Stretch(0.1), PowerDistortion(0.5), PowerDistortion(3.0),
             MisspecifiedPrior(Belief([0.2, 0.5, 0.3])), ExtremeBeliefAversion(0.2)]
    for rule in rules:
        Y = rule.posteriors(three_state_env)
        assert np.all(Y >= 0)
        np.testing.assert_allclose(Y.sum(axis=1), 1.0, atol=1e-10)
