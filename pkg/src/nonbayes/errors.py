"""Exception hierarchy.

Every error raised for bad input derives from :class:`ModelError`, which is a
``ValueError`` so callers that only care about "bad input" can catch that.
"""


class ModelError(ValueError):
    """Base class for invalid model input."""


class DimensionMismatch(ModelError):
    pass


class NonSimplexPrior(ModelError):
    """Prior is not a probability vector over the states."""


class ZeroSupportPrior(ModelError):
    """Prior puts (numerically) zero mass on some state; full support is required."""


class RowNotDistribution(ModelError):
    """For some state the likelihoods over realizations do not sum to one."""


class ZeroProbabilityRealization(ModelError):
    """Some realization has zero marginal probability under the prior."""


class AffineDependence(ModelError):
    """Points that must be affinely independent are not."""


class EmptyGenerators(ModelError):
    pass


class LeftSimplex(ModelError):
    """A stretched posterior overshoots the boundary of the simplex."""


class MissingRealization(ModelError):
    pass


class RuleDomainError(ModelError):
    """Rule parameters are outside their admissible range for this environment."""


class NotOutsideHull(ModelError):
    """The distorted posterior lies in the hull of the Bayesian posteriors."""


class NoMisreading(ModelError):
    """Every realization is interpreted correctly (all q_s = 1)."""


class ExploitVerificationError(RuntimeError):
    """A constructed contract failed its independent payoff check."""


class SamplingExhausted(RuntimeError):
    pass
