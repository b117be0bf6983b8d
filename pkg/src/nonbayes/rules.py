"""Non-Bayesian updating rules and the under/over-reaction classifier.

Deterministic rules map ``(env, s)`` to one distorted posterior; random rules
map it to a finite distribution over posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import errors
from .belief import SIMPLEX_TOL, Belief, Environment, SignalModel, _bayes_formula
from .geometry import hull_membership

BAYES_TOL = 1e-9
LINE_TOL = 1e-8
SEGMENT_TOL = 1e-9


def _per_realization(value, s: int, name: str) -> float:
    if np.ndim(value) == 0:
        return float(value)
    try:
        return float(value[s])
    except IndexError:
        raise errors.MissingRealization(f"{name} has no entry for realization {s}") from None


def _check_range(value, lo, hi, name, lo_open=False, hi_open=False):
    vals = np.atleast_1d(np.asarray(value, dtype=float))
    if not np.all(np.isfinite(vals)):
        raise errors.RuleDomainError(f"{name} must be finite")
    if np.any(vals < lo) or (lo_open and np.any(vals == lo)) or (hi is not None and (np.any(vals > hi) or (hi_open and np.any(vals == hi)))):
        bounds = f"{'(' if lo_open else '['}{lo}, {'inf' if hi is None else hi}{')' if hi_open or hi is None else ']'}"
        raise errors.RuleDomainError(f"{name}={value!r} outside {bounds}")


class DeterministicRule:
    """Base class; subclasses implement :meth:`distort` on raw arrays."""

    kind: str = ""

    def distort(self, env: Environment, s: int) -> np.ndarray:
        raise NotImplementedError

    def apply(self, env: Environment, s: int | str) -> Belief:
        return Belief(self.distort(env, env.index(s)))

    def posteriors(self, env: Environment) -> np.ndarray:
        """All distorted posteriors, row ``s`` is ``x_hat_s``."""
        return np.array([self.apply(env, s).probs for s in range(env.m)])


@dataclass(frozen=True)
class Bayesian(DeterministicRule):
    kind = "bayesian"

    def distort(self, env, s):
        return env.posteriors[s]


@dataclass(frozen=True)
class Shrink(DeterministicRule):
    """``lam_s * mu + (1 - lam_s) * x_s``; ``lam`` is a scalar or one value per realization."""

    lam: Union[float, tuple[float, ...]]
    kind = "shrink"

    def __post_init__(self):
        if np.ndim(self.lam):
            object.__setattr__(self, "lam", tuple(float(v) for v in self.lam))
        _check_range(self.lam, 0.0, 1.0, "shrink lambda")

    def distort(self, env, s):
        lam = _per_realization(self.lam, s, "shrink lambda")
        return lam * env.mu + (1.0 - lam) * env.posteriors[s]


@dataclass(frozen=True)
class Stretch(DeterministicRule):
    """``mu + (1 + lam_s)(x_s - mu)``; raises :class:`LeftSimplex` on overshoot."""

    lam: Union[float, tuple[float, ...]]
    kind = "stretch"

    def __post_init__(self):
        if np.ndim(self.lam):
            object.__setattr__(self, "lam", tuple(float(v) for v in self.lam))
        _check_range(self.lam, 0.0, None, "stretch lambda")

    def distort(self, env, s):
        lam = _per_realization(self.lam, s, "stretch lambda")
        out = env.mu + (1.0 + lam) * (env.posteriors[s] - env.mu)
        if np.any(out < -1e-12):
            raise errors.LeftSimplex(
                f"stretch lambda={lam} pushes the posterior at realization {env.labels[s]!r} out of the simplex"
            )
        return out

    @staticmethod
    def max_lambda(env: Environment, s: int) -> float:
        """Largest stretch keeping the posterior at ``s`` in the simplex."""
        d = env.posteriors[s] - env.mu
        neg = d < 0
        if not np.any(neg):
            return np.inf
        return float(np.min(env.posteriors[s][neg] / -d[neg]))


def power_distort(x: np.ndarray, beta: float) -> np.ndarray:
    w = np.power(x, beta)
    return w / w.sum()


@dataclass(frozen=True)
class PowerDistortion(DeterministicRule):
    """Coordinatewise power-normalisation ``x_hat(theta) ~ x_s(theta)**beta``."""

    beta: float
    kind = "power"

    def __post_init__(self):
        _check_range(self.beta, 0.0, None, "beta")

    def distort(self, env, s):
        return power_distort(env.posteriors[s], self.beta)


def grether_two_state(x: float, beta: float) -> float:
    """Closed form for two states and a uniform prior."""
    a = x**beta
    return a / (a + (1.0 - x) ** beta)


@dataclass(frozen=True)
class GretherTwoState(DeterministicRule):
    """Alpha-beta distortion for two states.

    With a uniform prior the closed form is applied to the first coordinate;
    otherwise this is :class:`PowerDistortion` with the same exponent.
    """

    beta: float
    kind = "grether2"

    def __post_init__(self):
        _check_range(self.beta, 0.0, None, "beta")

    def distort(self, env, s):
        if env.n != 2:
            raise errors.DimensionMismatch("the two-state alpha-beta rule needs exactly two states")
        x = env.posteriors[s]
        if abs(env.mu[0] - 0.5) <= SIMPLEX_TOL:
            h = grether_two_state(float(x[0]), self.beta)
            return np.array([h, 1.0 - h])
        return power_distort(x, self.beta)


@dataclass(frozen=True)
class MisspecifiedPrior(DeterministicRule):
    """Bayes' rule applied with the agent's own prior ``nu`` instead of ``mu``."""

    nu: Belief
    kind = "misspecified_prior"

    def __post_init__(self):
        nu = self.nu if isinstance(self.nu, Belief) else Belief(self.nu)
        if np.any(nu.probs < 1e-9):
            raise errors.RuleDomainError("the misspecified prior must have full support")
        object.__setattr__(self, "nu", nu)

    def distort(self, env, s):
        if self.nu.n != env.n:
            raise errors.DimensionMismatch(f"nu has {self.nu.n} states, environment has {env.n}")
        return _bayes_formula(self.nu.probs, env.signal.likelihoods[s])


@dataclass(frozen=True)
class ExtremeBeliefAversion(DeterministicRule):
    """Minimal shrink toward the prior keeping every coordinate in ``[eps, 1 - eps]``."""

    eps: float
    kind = "extreme_belief_aversion"

    def __post_init__(self):
        _check_range(self.eps, 0.0, 0.5, "epsilon", lo_open=True, hi_open=True)

    def shrink_weight(self, env: Environment, s: int) -> float:
        eps = self.eps
        if not eps < 1.0 / env.n:
            raise errors.RuleDomainError(f"epsilon must be below 1/n = {1.0 / env.n:.6g}")
        mu, x = env.mu, env.posteriors[s]
        if np.any(mu < eps) or np.any(mu > 1.0 - eps):
            raise errors.RuleDomainError(
                "the prior itself violates the belief cap, so no shrink toward it can satisfy it"
            )
        lam = 0.0
        low = x < eps
        if np.any(low):
            lam = max(lam, float(np.max((eps - x[low]) / (mu[low] - x[low]))))
        high = x > 1.0 - eps
        if np.any(high):
            lam = max(lam, float(np.max((x[high] - (1.0 - eps)) / (x[high] - mu[high]))))
        return min(lam, 1.0)

    def distort(self, env, s):
        lam = self.shrink_weight(env, s)
        return lam * env.mu + (1.0 - lam) * env.posteriors[s]


@dataclass(frozen=True)
class Tabulated(DeterministicRule):
    """Distorted posteriors given explicitly, one per realization."""

    table: tuple[Belief, ...]
    kind = "posteriors"

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(b if isinstance(b, Belief) else Belief(b) for b in self.table))

    def distort(self, env, s):
        if len(self.table) != env.m:
            raise errors.DimensionMismatch(f"{len(self.table)} tabulated posteriors for {env.m} realizations")
        if self.table[s].n != env.n:
            raise errors.DimensionMismatch("tabulated posterior has the wrong number of states")
        return self.table[s].probs


def apply_deterministic(rule: DeterministicRule, env: Environment, s: int | str) -> Belief:
    return rule.apply(env, s)


# -- random rules -----------------------------------------------------------


@dataclass(frozen=True)
class RandomRule:
    """Finite-support random posteriors: ``support[s]`` lists ``(Belief, prob)`` pairs."""

    support: tuple[tuple[tuple[Belief, float], ...], ...]

    def __post_init__(self):
        compiled = []
        for s, pairs in enumerate(self.support):
            pairs = tuple((b if isinstance(b, Belief) else Belief(b), float(p)) for b, p in pairs)
            if not pairs:
                raise errors.ModelError(f"realization {s} has an empty support list")
            probs = np.array([p for _, p in pairs])
            if np.any(probs < 0) or np.any(probs > 1) or abs(probs.sum() - 1.0) > SIMPLEX_TOL:
                raise errors.ModelError(f"support probabilities at realization {s} are not a distribution: {probs}")
            compiled.append(pairs)
        object.__setattr__(self, "support", tuple(compiled))

    def distribution(self, env: Environment, s: int | str) -> tuple[tuple[Belief, float], ...]:
        i = env.index(s)
        if i >= len(self.support):
            raise errors.MissingRealization(f"no support list for realization {env.labels[i]!r}")
        return self.support[i]

    def check(self, env: Environment) -> None:
        if len(self.support) != env.m:
            raise errors.MissingRealization(f"random rule covers {len(self.support)} of {env.m} realizations")
        for pairs in self.support:
            for b, _ in pairs:
                if b.n != env.n:
                    raise errors.DimensionMismatch("support belief has the wrong number of states")

    def sample(self, env: Environment, s: int | str, rng: np.random.Generator) -> Belief:
        pairs = self.distribution(env, s)
        k = rng.choice(len(pairs), p=np.array([p for _, p in pairs]))
        return pairs[k][0]

    def compile(self, env: Environment) -> "RandomRule":
        return self


def apply_random(rule, env: Environment, s: int | str):
    """Finite distribution of the agent's posterior after realization ``s``."""
    return rule.compile(env).distribution(env, s)


@dataclass(frozen=True)
class ConfirmatoryBias:
    """Generalized confirmatory bias.

    Realization ``s`` is read correctly with probability ``q[s]``; otherwise
    the agent adopts the Bayesian posterior of ``error_target[s]``. Without an
    explicit target, a misread realization is taken as the other realization
    whose Bayesian posterior puts the most weight on the prior's modal state,
    which for two states and two realizations is the prior-confirming one.
    """

    q: tuple[float, ...]
    error_target: Optional[tuple[Optional[int], ...]] = None

    def __post_init__(self):
        q = tuple(float(v) for v in self.q)
        _check_range(q, 0.0, 1.0, "q")
        object.__setattr__(self, "q", q)
        if self.error_target is not None:
            object.__setattr__(
                self, "error_target", tuple(None if t is None else int(t) for t in self.error_target)
            )

    def targets(self, env: Environment) -> tuple[int, ...]:
        if len(self.q) != env.m:
            raise errors.MissingRealization(f"q has {len(self.q)} entries for {env.m} realizations")
        modal = int(np.argmax(env.mu))
        out = []
        for s in range(env.m):
            t = None if self.error_target is None else self.error_target[s]
            if t is None:
                others = [j for j in range(env.m) if j != s]
                t = max(others, key=lambda j: (env.posteriors[j][modal], -j))
            if not 0 <= t < env.m or t == s:
                raise errors.RuleDomainError(f"error target for realization {s} must be another realization, got {t}")
            out.append(t)
        return tuple(out)

    def compile(self, env: Environment) -> RandomRule:
        X = env.posteriors
        support = []
        for s, t in enumerate(self.targets(env)):
            pairs = [(Belief(X[s]), self.q[s])]
            if self.q[s] < 1.0:
                pairs.append((Belief(X[t]), 1.0 - self.q[s]))
            support.append(tuple((b, p) for b, p in pairs if p > 0))
        return RandomRule(tuple(support))

    def distribution(self, env, s):
        return self.compile(env).distribution(env, s)


AnyRule = Union[DeterministicRule, RandomRule, ConfirmatoryBias]


def support_table(rule: AnyRule, env: Environment) -> list[list[tuple[np.ndarray, float]]]:
    """Uniform view of any rule: for each realization, ``(posterior array, prob)`` pairs."""
    if isinstance(rule, DeterministicRule):
        return [[(rule.apply(env, s).probs, 1.0)] for s in range(env.m)]
    rr = rule.compile(env)
    rr.check(env)
    return [[(b.probs, p) for b, p in rr.support[s]] for s in range(env.m)]


# -- classification ---------------------------------------------------------

BAYESIAN = "Bayesian"
UNDER = "Under"
OVER = "Over"
SKIPS_PRIOR = "SkipsPrior"
OUTSIDE_HULL = "OutsideHull"
DEGENERATE = "Degenerate"
UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class Reaction:
    """Classification of one distorted posterior.

    ``lam`` is the shrink weight for Under, the overreaction weight ``l`` with
    ``x_s = l * mu + (1 - l) * x_hat`` for Over, and the raw line parameter
    (greater than one) for SkipsPrior.
    """

    tag: str
    lam: Optional[float] = None
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {"tag": self.tag, "lambda": self.lam, "residual": self.residual}


def classify_reaction(env: Environment, posterior, s: int | str) -> Reaction:
    i = env.index(s)
    y = np.asarray(posterior, dtype=float)
    x = env.posteriors[i]
    mu = env.mu
    if np.max(np.abs(y - x)) <= BAYES_TOL:
        return Reaction(BAYESIAN, 0.0, float(np.linalg.norm(y - x)))
    d = mu - x
    dd = float(d @ d)
    if dd <= 1e-24:
        return Reaction(DEGENERATE, None, float(np.linalg.norm(y - mu)))
    # y ~ x + t (mu - x)
    t = float((y - x) @ d) / dd
    residual = float(np.linalg.norm(y - (x + t * d)))
    if residual <= LINE_TOL:
        if -SEGMENT_TOL <= t <= 1.0 + SEGMENT_TOL:
            return Reaction(UNDER, min(max(t, 0.0), 1.0), residual)
        if t < 0:
            return Reaction(OVER, -t / (1.0 - t), residual)
        return Reaction(SKIPS_PRIOR, t, residual)
    cert = hull_membership(y, env.posteriors)
    return Reaction(OUTSIDE_HULL if cert.outside else UNCLASSIFIED, None, residual)


def classify_rule(env: Environment, rule: DeterministicRule) -> list[Reaction]:
    return [classify_reaction(env, rule.apply(env, s), s) for s in range(env.m)]


def underreacts_to_information(env: Environment, rule: DeterministicRule) -> bool:
    return all(r.tag in (BAYESIAN, UNDER) for r in classify_rule(env, rule))


def overreacts_to_information(env: Environment, rule: DeterministicRule) -> bool:
    return all(r.tag == OVER for r in classify_rule(env, rule))


# -- systematic distortion check -------------------------------------------


@dataclass
class SystematicReport:
    rule: str
    trials: int
    systematic: bool
    max_discrepancy: float
    tolerance: float = 1e-9

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def planted_environment(prior: np.ndarray, target: np.ndarray, m: int, rng: np.random.Generator,
                        s: int = 0) -> Environment:
    """Random environment whose Bayesian posterior at realization ``s`` equals ``target``.

    Uses ``pi(s|theta) = c * target(theta) / prior(theta)``, with the remaining
    likelihood mass split at random among the other realizations.
    """
    n = prior.size
    c = 0.9 * float(np.min(prior / target))
    row = c * target / prior
    rest = rng.dirichlet(np.ones(m - 1), size=n).T * (1.0 - row)[None, :]
    L = np.insert(rest, s, row, axis=0)
    L[:, :] /= L.sum(axis=0, keepdims=True)
    return Environment(Belief(prior), SignalModel(L))


def _rule_shape(rule: DeterministicRule) -> tuple[Optional[int], Optional[int]]:
    n = m = None
    if isinstance(rule, GretherTwoState):
        n = 2
    if isinstance(rule, MisspecifiedPrior):
        n = rule.nu.n
    if isinstance(rule, Tabulated):
        n, m = rule.table[0].n, len(rule.table)
    lam = getattr(rule, "lam", None)
    if lam is not None and np.ndim(lam):
        m = len(lam)
    return n, m


def systematic_consistency_check(rule: DeterministicRule, trials: int = 100,
                                 rng: int | np.random.Generator = 0,
                                 tol: float = 1e-9) -> SystematicReport:
    """Test whether ``rule`` depends on the Bayesian posterior alone.

    Each trial plants one Bayesian posterior in two environments with
    different priors and signals, then compares the rule's outputs there.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    n_fixed, m_fixed = _rule_shape(rule)
    worst = 0.0
    done = attempts = 0
    while done < trials:
        attempts += 1
        if attempts > 100 * trials:
            raise errors.SamplingExhausted(f"rule {rule!r} rejected too many planted environments")
        n = n_fixed or int(rng.integers(2, 5))
        m = m_fixed or int(rng.integers(2, n + 1))
        target = 0.02 / n + (1 - 0.02) * rng.dirichlet(np.ones(n))
        priors = [0.02 / n + (1 - 0.02) * rng.dirichlet(np.ones(n)) for _ in range(2)]
        if isinstance(rule, ExtremeBeliefAversion):
            priors = [0.5 * p + 0.5 / n for p in priors]
        envs = [planted_environment(p, target, m, rng) for p in priors]
        try:
            outs = [rule.apply(e, 0).probs for e in envs]
        except (errors.LeftSimplex, errors.RuleDomainError):
            continue
        worst = max(worst, float(np.max(np.abs(outs[0] - outs[1]))))
        done += 1
    name = getattr(rule, "kind", type(rule).__name__)
    return SystematicReport(name, trials, worst <= tol, worst, tol)


def builtin_systematic_survey(trials: int = 100, seed: int = 0) -> dict[str, SystematicReport]:
    """Run the consistency check for one representative of every builtin rule."""
    rules = {
        "bayesian": Bayesian(),
        "power": PowerDistortion(2.0),
        "grether2": GretherTwoState(2.0),
        "shrink": Shrink(0.5),
        "stretch": Stretch(0.2),
        "misspecified_prior": MisspecifiedPrior(Belief([0.7, 0.3])),
        "extreme_belief_aversion": ExtremeBeliefAversion(0.1),
    }
    return {k: systematic_consistency_check(r, trials, seed) for k, r in rules.items()}
