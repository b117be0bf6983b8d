"""Screening imperfectly Bayesian agents: posteriors, distortions and exploitation."""

from .belief import (
    Belief,
    Environment,
    PosteriorSystem,
    SignalModel,
    bayes_posterior,
    posterior_system,
    realization_marginal,
    validate_environment,
)
from .exploit import (
    Action,
    DecisionProblem,
    ExploitContract,
    action_value,
    agent_best_response,
    build_confirmatory_exploit,
    build_overreaction_exploit,
    ex_ante_payoff,
    exploitability_status,
    prune_dagger_actions,
)
from .geometry import (
    Hyperplane,
    HullCertificate,
    affinely_independent,
    exposing_hyperplane,
    hull_membership,
    project_to_hull,
)
from .rules import (
    Bayesian,
    ConfirmatoryBias,
    ExtremeBeliefAversion,
    GretherTwoState,
    MisspecifiedPrior,
    PowerDistortion,
    RandomRule,
    Reaction,
    Shrink,
    Stretch,
    Tabulated,
    apply_deterministic,
    apply_random,
    classify_reaction,
    systematic_consistency_check,
    underreacts_to_information,
)
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .simulate import MonteCarloResult, simulate

__version__ = "0.1.0"
