"""Priors, signals and Bayesian posteriors.

Beliefs are stored in R^n on the probability simplex (not in an n-1
dimensional chart), so payoff vectors index states directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import errors
from .geometry import affinely_independent

SIMPLEX_TOL = 1e-10
POSITIVITY_TOL = 1e-9


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Belief:
    """A probability vector over ``n >= 2`` states."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise errors.DimensionMismatch(f"belief must be a vector of length >= 2, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise errors.ModelError("belief has non-finite entries")
        # absorb round-off at the faces of the simplex
        p = np.where((p < 0) & (p > -1e-12), 0.0, p)
        p = np.where((p > 1) & (p < 1 + 1e-12), 1.0, p)
        if np.any(p < 0) or np.any(p > 1):
            raise errors.ModelError(f"belief entries must lie in [0, 1]: {p}")
        if abs(p.sum() - 1.0) > SIMPLEX_TOL:
            raise errors.ModelError(f"belief must sum to 1 (sum={float(p.sum()):.12g})")
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def n(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.probs[i]

    def __iter__(self):
        return iter(self.probs)

    def __eq__(self, other):
        if not isinstance(other, Belief):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"Belief({np.array2string(self.probs, precision=6, separator=', ')})"

    def isclose(self, other, atol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.probs - np.asarray(other, dtype=float))) <= atol)

    def tolist(self) -> list[float]:
        return self.probs.tolist()


@dataclass(frozen=True, eq=False)
class SignalModel:
    """Likelihoods ``pi(s | theta)`` stored as an ``|S| x n`` matrix.

    Row ``s`` holds the probability of realization ``s`` in each state, so
    every column is a distribution over realizations.
    """

    likelihoods: np.ndarray
    realization_labels: tuple[str, ...] = ()

    def __post_init__(self):
        L = np.asarray(self.likelihoods, dtype=float)
        if L.ndim != 2:
            raise errors.DimensionMismatch("likelihoods must be a 2-d array (realizations x states)")
        m, n = L.shape
        if m < 2:
            raise errors.ModelError("a signal needs at least two realizations")
        if n < 2:
            raise errors.DimensionMismatch("at least two states are required")
        if not np.all(np.isfinite(L)) or np.any(L < 0) or np.any(L > 1):
            raise errors.RowNotDistribution("likelihoods must lie in [0, 1]")
        col_sums = L.sum(axis=0)
        bad = np.flatnonzero(np.abs(col_sums - 1.0) > SIMPLEX_TOL)
        if bad.size:
            raise errors.RowNotDistribution(
                f"likelihoods for state {int(bad[0])} sum to {float(col_sums[bad[0]]):.12g}, not 1: "
                "each state must induce a distribution over realizations"
            )
        labels = tuple(str(x) for x in self.realization_labels) or tuple(f"s{i}" for i in range(m))
        if len(labels) != m:
            raise errors.DimensionMismatch(f"{len(labels)} labels for {m} realizations")
        if len(set(labels)) != m:
            raise errors.ModelError(f"realization labels must be unique: {labels}")
        object.__setattr__(self, "likelihoods", _frozen(L))
        object.__setattr__(self, "realization_labels", labels)

    @property
    def m(self) -> int:
        return self.likelihoods.shape[0]

    @property
    def n(self) -> int:
        return self.likelihoods.shape[1]


def _bayes_formula(prior: np.ndarray, likelihood_row: np.ndarray) -> np.ndarray:
    joint = prior * likelihood_row
    return joint / joint.sum()


@dataclass(frozen=True, eq=False)
class Environment:
    """A common full-support prior together with a signal."""

    prior: Belief
    signal: SignalModel

    def __post_init__(self):
        if self.prior.n != self.signal.n:
            raise errors.DimensionMismatch(
                f"prior has {self.prior.n} states but likelihoods have {self.signal.n}"
            )
        if np.any(self.prior.probs < POSITIVITY_TOL):
            i = int(np.argmin(self.prior.probs))
            raise errors.ZeroSupportPrior(
                f"prior must have full support (interior of the simplex); state {i} has mass {float(self.prior.probs[i]):.3g}"
            )
        marg = self.signal.likelihoods @ self.prior.probs
        if np.any(marg <= POSITIVITY_TOL):
            s = int(np.argmin(marg))
            raise errors.ZeroProbabilityRealization(
                f"realization {self.signal.realization_labels[s]!r} has marginal probability {float(marg[s]):.3g}; "
                "every realization must occur with strictly positive probability"
            )

    @property
    def n(self) -> int:
        return self.prior.n

    @property
    def m(self) -> int:
        return self.signal.m

    @property
    def labels(self) -> tuple[str, ...]:
        return self.signal.realization_labels

    @property
    def mu(self) -> np.ndarray:
        return self.prior.probs

    def index(self, s: int | str) -> int:
        """Resolve a realization label or index to an index."""
        if isinstance(s, (int, np.integer)):
            if not 0 <= s < self.m:
                raise errors.MissingRealization(f"realization index {s} out of range 0..{self.m - 1}")
            return int(s)
        try:
            return self.labels.index(s)
        except ValueError:
            raise errors.MissingRealization(f"unknown realization {s!r}; known: {self.labels}") from None

    @cached_property
    def marginals(self) -> np.ndarray:
        return _frozen(self.signal.likelihoods @ self.prior.probs)

    @cached_property
    def posteriors(self) -> np.ndarray:
        """Bayesian posteriors as an ``m x n`` array (row ``s`` is ``x_s``)."""
        joint = self.signal.likelihoods * self.prior.probs[None, :]
        return _frozen(joint / joint.sum(axis=1, keepdims=True))

    @classmethod
    def from_arrays(cls, prior, likelihoods, labels: Sequence[str] = ()) -> "Environment":
        return validate_environment(prior, likelihoods, labels)


@dataclass(frozen=True)
class PosteriorSystem:
    marginals: np.ndarray
    bayes_posteriors: tuple[Belief, ...]
    affinely_independent: bool

    def as_array(self) -> np.ndarray:
        return np.array([b.probs for b in self.bayes_posteriors])


def validate_environment(prior, likelihoods, labels: Sequence[str] = ()) -> Environment:
    """Build an :class:`Environment`, enforcing the model's standing assumptions.

    Raises
    ------
    NonSimplexPrior, ZeroSupportPrior, RowNotDistribution,
    ZeroProbabilityRealization, DimensionMismatch
    """
    try:
        mu = Belief(prior)
    except errors.DimensionMismatch:
        raise
    except errors.ModelError as exc:
        raise errors.NonSimplexPrior(f"prior is not a probability vector: {exc}") from None
    signal = SignalModel(likelihoods, tuple(labels))
    return Environment(mu, signal)


def bayes_posterior(env: Environment, s: int | str) -> Belief:
    """Posterior ``x_s(theta) = mu(theta) pi(s|theta) / sum_theta' mu(theta') pi(s|theta')``."""
    i = env.index(s)
    return Belief(env.posteriors[i])


def realization_marginal(env: Environment, s: int | str) -> float:
    return float(env.marginals[env.index(s)])


def posterior_system(env: Environment) -> PosteriorSystem:
    X = env.posteriors
    return PosteriorSystem(
        marginals=env.marginals,
        bayes_posteriors=tuple(Belief(x) for x in X),
        affinely_independent=affinely_independent(X),
    )


def require_affine_independence(env: Environment) -> None:
    if not affinely_independent(env.posteriors):
        raise errors.AffineDependence(
            "the Bayesian posteriors of this environment are not affinely independent"
        )
