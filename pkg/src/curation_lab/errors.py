"""Exception types shared across the package."""


class CurationLabError(Exception):
    """Base class for every error raised by this package."""


class SpaceMismatch(CurationLabError):
    """Two objects that must live on the same state space do not."""


class AllZeroError(CurationLabError):
    """A density was requested from all-zero raw weights."""


class NegativeEntryError(CurationLabError):
    """A nonnegative array contains a negative entry."""


class EmptySupport(CurationLabError):
    """An operation requires a nonempty support set."""


class NonPositiveQ(CurationLabError):
    """Supplied utility values must be strictly positive."""


class NonFiniteReward(CurationLabError):
    """Rewards (or the utilities derived from them) must be finite."""


class AlphaOutOfRange(CurationLabError):
    """The mixing weight lies outside its admissible interval."""


class UnsupportedNoise(CurationLabError):
    """The requested operation cannot run under this noise model."""


class SupportOverflow(CurationLabError):
    """A discrete convolution exceeded the configured atom budget."""


class NormalizationDrift(CurationLabError):
    """A kernel-reweighted density drifted too far from unit mass."""


class NonPositiveUtility(CurationLabError):
    """Selection utilities must be strictly positive."""


class AssumptionA1Violated(CurationLabError):
    """The start density puts no mass on the utility-maximizing set."""


class AssumptionA3Violated(CurationLabError):
    """The mixing weight is below the fixed-point admissibility threshold."""


class BracketFailure(CurationLabError):
    """The scalar root bracket broke down (non-monotone or unresolvable)."""


class NotContractive(CurationLabError):
    """The finite-pool mixed update is not a contraction for these (K, alpha)."""


class MaxIterations(CurationLabError):
    """An iterative solver hit its iteration budget before converging."""


class TMaxZero(CurationLabError):
    """Trajectory iteration requires at least one step."""


class SupportViolation(CurationLabError):
    """A density places mass outside the support of its reference density."""


class HypothesisViolated(CurationLabError):
    """An explicit construction's hypotheses fail for the given inputs."""


class DegenerateRound(CurationLabError):
    """A finite-sample curation round produced no samples."""


class InsufficientData(CurationLabError):
    """Not enough cells remain for a goodness-of-fit statistic."""


class ParseError(CurationLabError):
    """An experiment file is not syntactically valid."""


class ValidationError(CurationLabError):
    """An experiment file is syntactically valid but violates a precondition."""
