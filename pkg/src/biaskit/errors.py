"""Exception hierarchy shared by all biaskit modules."""


class BiaskitError(Exception):
    """Base class for all toolkit errors."""


class ParseError(BiaskitError):
    """A file does not conform to its documented format."""


class ValidationError(BiaskitError):
    """Parsed data violates a structural invariant."""


class DimMismatchError(BiaskitError):
    """Vectors of different dimensionality were combined."""


class ZeroNormError(BiaskitError):
    """A vector with zero Euclidean norm was used where a direction is required."""


class EmptySetError(BiaskitError):
    """A target or attribute set is empty."""


class DegenerateSpreadError(BiaskitError):
    """The association scores have zero spread, so the effect size is undefined."""


class NonFiniteError(BiaskitError):
    """A non-finite value reached a numeric routine."""


class NoContextsError(BiaskitError):
    """A stimulus has no stored contexts in the requested segment bin."""


class InsufficientSamplesError(BiaskitError):
    """Pooling needs at least two sample effects."""


class ZeroVarianceError(BiaskitError):
    """A sample carries zero in-sample variance, so its weight is undefined."""


class PlaceholderError(BiaskitError):
    """A template is missing (or duplicates) a required placeholder."""


class NonPositiveProbabilityError(BiaskitError):
    """A probability outside (0, 1] cannot be log-scored."""


class MissingScoreError(BiaskitError):
    """A (target, attribute) pair has no answered probability."""


class DanglingGroupError(BiaskitError):
    """A stimulus references a suffix group that does not exist."""


class VariantCollisionError(BiaskitError):
    """Two different stimuli generate the same surface variant."""
