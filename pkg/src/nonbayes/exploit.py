"""Decision problems, the agent's best response, and exploitation contracts.

An action's payoff vector ``u`` gives its expected value ``u . x`` at belief
``x``. On the simplex this is the affine functional ``alpha . x - beta``
obtained by gauging ``u``; no separate ``(alpha, beta)`` pair is stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import errors
from .belief import Environment, require_affine_independence
from .geometry import Hyperplane, exposing_hyperplane, hull_membership
from .rules import (
    AnyRule,
    ConfirmatoryBias,
    DeterministicRule,
    RandomRule,
    classify_rule,
    support_table,
    underreacts_to_information,
)

TIE_TOL = 1e-12
PAYOFF_TOL = 1e-9
OUTSIDE = None  # label of the outside option in choices


@dataclass(frozen=True, eq=False)
class Action:
    label: str
    payoffs: np.ndarray

    def __post_init__(self):
        u = np.array(self.payoffs, dtype=float)
        if u.ndim != 1 or not np.all(np.isfinite(u)):
            raise errors.ModelError(f"action {self.label!r} needs a finite payoff vector")
        u.setflags(write=False)
        object.__setattr__(self, "payoffs", u)
        object.__setattr__(self, "label", str(self.label))

    def to_dict(self) -> dict:
        return {"label": self.label, "payoffs": self.payoffs.tolist()}

    def affine_form(self) -> tuple[np.ndarray, float]:
        """Gauged ``(alpha, beta)`` with ``u . x == alpha . x - beta`` on the simplex."""
        c = self.payoffs.mean()
        return self.payoffs - c, -c


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    """A finite menu of actions; the zero-payoff outside option is implicit."""

    actions: tuple[Action, ...] = ()

    def __post_init__(self):
        acts = tuple(self.actions)
        labels = [a.label for a in acts]
        if len(set(labels)) != len(labels):
            raise errors.ModelError(f"action labels must be unique: {labels}")
        if len({a.payoffs.size for a in acts}) > 1:
            raise errors.DimensionMismatch("all actions must have the same number of states")
        object.__setattr__(self, "actions", acts)

    @classmethod
    def from_matrix(cls, payoffs, labels: Optional[Sequence[str]] = None) -> "DecisionProblem":
        U = np.atleast_2d(np.asarray(payoffs, dtype=float)) if len(payoffs) else np.zeros((0, 0))
        labels = labels or [f"a{i + 1}" for i in range(len(U))]
        return cls(tuple(Action(lab, row) for lab, row in zip(labels, U)))

    @property
    def labels(self) -> list[str]:
        return [a.label for a in self.actions]

    def matrix(self, n: int) -> np.ndarray:
        if not self.actions:
            return np.zeros((0, n))
        U = np.array([a.payoffs for a in self.actions])
        if U.shape[1] != n:
            raise errors.DimensionMismatch(f"actions have {U.shape[1]} states, environment has {n}")
        return U

    def restrict(self, labels) -> "DecisionProblem":
        keep = set(labels)
        return DecisionProblem(tuple(a for a in self.actions if a.label in keep))

    def scaled(self, c: float) -> "DecisionProblem":
        return DecisionProblem(tuple(Action(a.label, c * a.payoffs) for a in self.actions))

    def to_dict(self) -> dict:
        return {"actions": [a.to_dict() for a in self.actions]}

    def __len__(self):
        return len(self.actions)


def action_value(action: Action | None, belief) -> float:
    """Expected payoff ``u . belief``; the outside option (``None``) is worth 0."""
    if action is None:
        return 0.0
    x = np.asarray(belief, dtype=float)
    if x.shape != action.payoffs.shape:
        raise errors.DimensionMismatch(f"action has {action.payoffs.size} states, belief {x.size}")
    return float(action.payoffs @ x)


def _choose(U: np.ndarray, labels: Sequence[str], distorted: np.ndarray, bayes: np.ndarray) -> int:
    """Index of the chosen action, or -1 for the outside option.

    Maximises value at ``distorted``; among near-ties, picks the lowest value
    at ``bayes`` (worst for the agent), then the smallest label with the
    outside option ordered first.
    """
    if U.shape[0] == 0:
        return -1
    v = U @ distorted
    best = max(float(v.max()), 0.0)
    tol = TIE_TOL * max(1.0, float(np.max(np.abs(U))))
    cands = np.flatnonzero(v >= best - tol)
    if not cands.size:
        return -1
    if best - tol > 0.0:
        options = [(float(U[i] @ bayes), 1, labels[i], int(i)) for i in cands]
    else:
        options = [(0.0, 0, "", -1)] + [(float(U[i] @ bayes), 1, labels[i], int(i)) for i in cands]
    return min(options)[3]


def agent_best_response(dp: DecisionProblem, distorted, bayes) -> Optional[str]:
    """Label of the action the agent takes, ``None`` for the outside option."""
    xh = np.asarray(distorted, dtype=float)
    U = dp.matrix(xh.size)
    i = _choose(U, dp.labels, xh, np.asarray(bayes, dtype=float))
    return OUTSIDE if i < 0 else dp.actions[i].label


@dataclass(frozen=True)
class AgentChoice:
    """Choices per realization; for random rules one entry per support point."""

    choices: tuple[tuple[Optional[str], ...], ...]

    def chosen_labels(self) -> set[str]:
        return {c for row in self.choices for c in row if c is not None}


def agent_choices(env: Environment, rule: AnyRule, dp: DecisionProblem) -> AgentChoice:
    table = support_table(rule, env)
    U = dp.matrix(env.n)
    out = []
    for s, pairs in enumerate(table):
        row = []
        for y, _ in pairs:
            i = _choose(U, dp.labels, y, env.posteriors[s])
            row.append(OUTSIDE if i < 0 else dp.actions[i].label)
        out.append(tuple(row))
    return AgentChoice(tuple(out))


def ex_ante_payoff(env: Environment, rule: AnyRule, dp: DecisionProblem) -> float:
    """``sum_s p_s sum_k P(y_k | s) u(a*(s, y_k)) . x_s``, choices made at the distorted ``y_k``."""
    U = dp.matrix(env.n)
    if U.shape[0] == 0:
        return 0.0
    X, p = env.posteriors, env.marginals
    total = 0.0
    for s, pairs in enumerate(support_table(rule, env)):
        for y, w in pairs:
            i = _choose(U, dp.labels, y, X[s])
            if i >= 0:
                total += p[s] * w * float(U[i] @ X[s])
    return total


# -- contracts ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExploitContract:
    problem: DecisionProblem
    target_loss: float
    predicted_takers: tuple[int, ...]
    achieved_payoff: float
    certificate: Hyperplane
    scale: float
    construction: str
    labels: tuple[str, ...] = ()
    epsilon: float = 0.0

    def to_dict(self) -> dict:
        return {
            "construction": self.construction,
            "problem": self.problem.to_dict(),
            "target_loss": self.target_loss,
            "predicted_takers": [self.labels[s] if self.labels else s for s in self.predicted_takers],
            "achieved_payoff": self.achieved_payoff,
            "certificate": self.certificate.to_dict(),
            "scale": self.scale,
            "epsilon": self.epsilon,
        }


def _check_target(K: float) -> float:
    K = float(K)
    if not np.isfinite(K) or K <= 0:
        raise errors.ModelError(f"target loss K must be positive, got {K}")
    return K


def _single_action_contract(env: Environment, rule: AnyRule, sep: Hyperplane, K: float,
                            construction: str, shift: float = 0.0, label: str = "exploit") -> ExploitContract:
    """Scale the action ``u = lam (alpha - beta + shift)`` so the agent loses exactly ``K``.

    Takers are predicted directly from the hyperplane: a type takes when its
    distorted value ``g(y) = alpha . y - beta + shift`` is positive, or zero
    while its Bayesian value is negative (ties go against the agent). The
    scale comes from the closed form ``lam = K / -sum_takers p g(x)``; the
    result is then re-evaluated through :func:`ex_ante_payoff`.
    """
    X, p = env.posteriors, env.marginals
    base = sep.normal - sep.offset + shift
    takers, denom = set(), 0.0
    for s, pairs in enumerate(support_table(rule, env)):
        gx = float(base @ X[s])
        for y, w in pairs:
            gy = float(base @ y)
            if gy > TIE_TOL or (abs(gy) <= TIE_TOL and gx < 0):
                takers.add(s)
                denom += p[s] * w * gx
    if not denom < 0:
        raise errors.ExploitVerificationError(
            f"single-action construction does not hurt the agent (taker payoff {denom!r})"
        )
    lam = K / -denom
    dp = DecisionProblem((Action(label, lam * base),))
    achieved = ex_ante_payoff(env, rule, dp)
    if abs(achieved + K) > PAYOFF_TOL * max(1.0, K):
        raise errors.ExploitVerificationError(
            f"contract evaluates to {achieved!r}, expected {-K!r}"
        )
    return ExploitContract(dp, K, tuple(sorted(takers)), achieved, sep, lam, construction, env.labels, shift)


def build_overreaction_exploit(env: Environment, rule: DeterministicRule, s: int | str, K: float) -> ExploitContract:
    """Single-action contract against a posterior outside the Bayesian hull.

    The action is worth ``lam (alpha . x - beta)`` where ``(alpha, beta)``
    separates the distorted posterior at ``s`` from the hull of the Bayesian
    posteriors. No Bayesian type wants it; every type that takes it loses, and
    ``lam`` is set so the total loss is ``K``.
    """
    K = _check_target(K)
    i = env.index(s)
    xh = rule.apply(env, i)
    cert = hull_membership(xh, env.posteriors)
    if not cert.outside:
        raise errors.NotOutsideHull(
            f"distorted posterior at {env.labels[i]!r} lies in the hull of the Bayesian posteriors"
        )
    return _single_action_contract(env, rule, cert.separator, K, "outside-hull")


def _misreading(rr: RandomRule, env: Environment) -> Optional[tuple[int, int]]:
    X = env.posteriors
    for s in range(env.m):
        for y, w in rr.support[s]:
            if w <= 0:
                continue
            for t in range(env.m):
                if t != s and np.max(np.abs(y.probs - X[t])) <= 1e-12:
                    return s, t
    return None


def build_confirmatory_exploit(env: Environment, bias: ConfirmatoryBias | RandomRule, K: float,
                               eps: float = 0.0) -> ExploitContract:
    """Contract against an agent who sometimes adopts another realization's posterior.

    If realization ``s`` is misread as ``t``, the action is built from the
    hyperplane exposing ``x_t`` in the Bayesian hull: it is worth zero at
    ``x_t`` and strictly less at every other Bayesian posterior. With
    ``eps == 0`` the holders of ``x_t`` take it through tie-breaking; with
    ``eps > 0`` the action is sweetened by ``eps`` (capped internally so the
    agent still loses) and the take is strict.
    """
    K = _check_target(K)
    if eps < 0:
        raise errors.ModelError("epsilon must be nonnegative")
    rr = bias.compile(env)
    rr.check(env)
    found = _misreading(rr, env)
    if found is None:
        raise errors.NoMisreading("no realization is misread, so this construction does not apply")
    require_affine_independence(env)
    s, t = found
    X, p = env.posteriors, env.marginals
    sep = exposing_hyperplane(X, t)
    shift = 0.0
    if eps > 0:
        g = sep.value(X)
        weights = np.array([
            p[j] * sum(w for y, w in rr.support[j] if np.max(np.abs(y.probs - X[t])) <= 1e-12)
            for j in range(env.m)
        ])
        cap = -float(weights @ g) / float(weights.sum())
        others = np.delete(g, t)
        if others.size:
            cap = min(cap, float(np.min(-others)))
        shift = min(float(eps), 0.5 * cap)
    return _single_action_contract(env, rr, sep, K, "exposed-point", shift=shift)


# -- exploitability ------------------------------------------------------------

EXPLOITABLE = "exploitable"
UNEXPLOITABLE = "unexploitable"
UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class ExploitabilityStatus:
    verdict: str
    reason: str
    env: Environment = field(repr=False)
    rule: AnyRule = field(repr=False)
    realization: Optional[int] = None
    separator: Optional[Hyperplane] = None
    construction: Optional[str] = None

    @property
    def exploitable(self) -> bool:
        return self.verdict == EXPLOITABLE

    def contract(self, K: float, eps: float = 0.0) -> ExploitContract:
        """Build the contract recipe behind an Exploitable verdict."""
        if not self.exploitable:
            raise errors.ModelError(f"no contract: verdict is {self.verdict} ({self.reason})")
        if self.construction == "exposed-point":
            return build_confirmatory_exploit(self.env, self.rule, K, eps)
        return _single_action_contract(self.env, self.rule, self.separator, _check_target(K), self.construction)

    def to_dict(self) -> dict:
        d = {"verdict": self.verdict, "reason": self.reason}
        if self.realization is not None:
            d["realization"] = self.env.labels[self.realization]
        if self.separator is not None:
            d["certificate"] = self.separator.to_dict()
        return d


def exploitability_status(env: Environment, rule: AnyRule) -> ExploitabilityStatus:
    """Decide exploitability where the theory settles it, else ``unknown``.

    Deterministic rules:
      1. some distorted posterior outside the Bayesian hull -> exploitable;
      2. underreaction at every realization -> unexploitable;
      3. binary signal otherwise -> exploitable, separating the offending
         posterior from the segment between the prior and its Bayesian posterior;
      4. anything else -> unknown.

    Random rules: a support point outside the hull, or a support point equal to
    another realization's Bayesian posterior, makes the agent exploitable; all
    support on the prior-posterior segments makes her unexploitable.
    """
    if not isinstance(rule, DeterministicRule):
        return _random_status(env, rule)
    X = env.posteriors
    xhat = rule.posteriors(env)
    for s in range(env.m):
        cert = hull_membership(xhat[s], X)
        if cert.outside:
            return ExploitabilityStatus(EXPLOITABLE, f"posterior at {env.labels[s]!r} lies outside the Bayesian hull",
                                        env, rule, s, cert.separator, "outside-hull")
    if underreacts_to_information(env, rule):
        return ExploitabilityStatus(UNEXPLOITABLE, "underreacts to information: every distorted posterior lies between the prior and its Bayesian posterior", env, rule)
    if env.m == 2:
        for s, r in enumerate(classify_rule(env, rule)):
            if r.tag in ("Bayesian", "Under"):
                continue
            cert = hull_membership(xhat[s], np.array([X[s], env.mu]))
            if cert.outside:
                return ExploitabilityStatus(
                    EXPLOITABLE,
                    f"binary signal and the posterior at {env.labels[s]!r} is not an underreaction ({r.tag})",
                    env, rule, s, cert.separator, "binary-not-underreacting",
                )
    return ExploitabilityStatus(UNKNOWN, "not characterized: inside the Bayesian hull without underreacting", env, rule)


def _random_status(env: Environment, rule) -> ExploitabilityStatus:
    rr = rule.compile(env)
    rr.check(env)
    X, mu = env.posteriors, env.mu
    for s in range(env.m):
        for y, w in rr.support[s]:
            if w <= 0:
                continue
            cert = hull_membership(y, X)
            if cert.outside:
                return ExploitabilityStatus(
                    EXPLOITABLE, f"a possible posterior at {env.labels[s]!r} lies outside the Bayesian hull",
                    env, rr, s, cert.separator, "outside-hull",
                )
    found = _misreading(rr, env)
    if found is not None and affinely_independent_posteriors(env):
        return ExploitabilityStatus(
            EXPLOITABLE, f"realization {env.labels[found[0]]!r} is sometimes read as {env.labels[found[1]]!r}",
            env, rr, found[0], None, "exposed-point",
        )
    on_segments = all(
        hull_membership(y, np.array([X[s], mu])).inside for s in range(env.m) for y, w in rr.support[s] if w > 0
    )
    if on_segments:
        return ExploitabilityStatus(UNEXPLOITABLE, "underreacts to information: every possible posterior lies between the prior and its Bayesian posterior", env, rr)
    return ExploitabilityStatus(UNKNOWN, "not characterized for this random rule", env, rr)


def affinely_independent_posteriors(env: Environment) -> bool:
    try:
        require_affine_independence(env)
    except errors.AffineDependence:
        return False
    return True


def prune_dagger_actions(env: Environment, rule: DeterministicRule, dp: DecisionProblem) -> DecisionProblem:
    """Drop every action that some type likes at her Bayesian posterior but not at her distorted one."""
    if not dp.actions:
        return dp
    U = dp.matrix(env.n)
    bayes_vals = U @ env.posteriors.T
    dist_vals = U @ rule.posteriors(env).T
    dagger = np.any((bayes_vals > TIE_TOL) & (dist_vals <= TIE_TOL), axis=1)
    return DecisionProblem(tuple(a for a, d in zip(dp.actions, dagger) if not d))


def chosen_subproblem(env: Environment, rule: AnyRule, dp: DecisionProblem) -> DecisionProblem:
    """The problem restricted to actions some type actually picks."""
    return dp.restrict(agent_choices(env, rule, dp).chosen_labels())
