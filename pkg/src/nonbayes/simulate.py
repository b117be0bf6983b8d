"""Monte Carlo simulation of the screening game.

Draws the state from the prior, the realization from the signal, the agent's
posterior from her rule, lets her best-respond, and averages the realised
payoff ``u(a*, theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import Environment
from .exploit import DecisionProblem, _choose, ex_ante_payoff
from .rules import AnyRule, support_table


@dataclass(frozen=True)
class MonteCarloResult:
    trials: int
    mean: float
    std_error: float
    analytic: float

    @property
    def z(self) -> float:
        diff = self.mean - self.analytic
        if self.std_error == 0:
            return 0.0 if abs(diff) <= 1e-12 else np.inf
        return diff / self.std_error

    def within(self, k: float = 4.0) -> bool:
        return abs(self.mean - self.analytic) <= k * self.std_error + 1e-12

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "empirical_mean": self.mean,
            "standard_error": self.std_error,
            "analytic": self.analytic,
            "z": self.z,
        }


def simulate(env: Environment, rule: AnyRule, dp: DecisionProblem, trials: int,
             rng: int | np.random.Generator = 0, chunk: int = 1_000_000) -> MonteCarloResult:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    table = support_table(rule, env)
    U = dp.matrix(env.n)
    n, m = env.n, env.m
    k_max = max(len(pairs) for pairs in table)

    # realised payoff per (realization, support point, state)
    payoff = np.zeros((m, k_max, n))
    support_cdf = np.ones((m, k_max))
    for s, pairs in enumerate(table):
        cdf = np.cumsum([w for _, w in pairs])
        support_cdf[s, : len(pairs)] = cdf
        support_cdf[s, len(pairs) - 1:] = 1.0
        for k, (y, _) in enumerate(pairs):
            i = _choose(U, dp.labels, y, env.posteriors[s])
            if i >= 0:
                payoff[s, k] = U[i]

    prior_cdf = np.cumsum(env.mu)
    prior_cdf[-1] = 1.0
    lik_cdf = np.cumsum(env.signal.likelihoods, axis=0)  # (m, n), cumulative over realizations
    lik_cdf[-1, :] = 1.0

    total = total_sq = 0.0
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        theta = np.searchsorted(prior_cdf, rng.random(b), side="right")
        u = rng.random(b)
        s = (u[:, None] >= lik_cdf[:, theta].T).sum(axis=1)
        v = rng.random(b)
        k = (v[:, None] >= support_cdf[s]).sum(axis=1)
        realised = payoff[s, k, theta]
        total += realised.sum()
        total_sq += (realised**2).sum()
        done += b
    mean = total / trials
    var = max(total_sq / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
    return MonteCarloResult(trials, float(mean), float(np.sqrt(var / trials)), ex_ante_payoff(env, rule, dp))
