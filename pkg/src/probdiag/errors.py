"""Exception hierarchy for the whole package.

Every error raised on purpose derives from ProbdiagError so callers can
catch package failures with a single except clause.
"""


class ProbdiagError(Exception):
    """Base class for all errors raised by probdiag."""


# -- indexing categories ----------------------------------------------------

class CycleError(ProbdiagError):
    """The declared covers contain a directed cycle."""


class NoInitialObjectError(ProbdiagError):
    """No object reaches every other object."""


class LcaViolationError(ProbdiagError):
    """Some pair of objects has no least common ancestor."""


class UnknownKindError(ProbdiagError):
    """Unknown standard-category or standard-space kind."""


class UnknownObjectError(ProbdiagError):
    """Object id not present in the category."""


class NotPrimeError(ProbdiagError):
    """The designated morphism factors through another object."""


class QuotientError(ProbdiagError):
    """Collapsing an object pair produced an invalid indexing category."""


# -- probability spaces -----------------------------------------------------

class WeightSumError(ProbdiagError):
    """Weights do not sum exactly to one."""


class NegativeWeightError(ProbdiagError):
    """A weight is negative."""


class DuplicateAtomError(ProbdiagError):
    """The same atom label appears twice."""


class BadParamError(ProbdiagError):
    """Invalid parameter for a standard space or construction."""


class NotSurjectiveError(ProbdiagError):
    """A declared target atom receives no mass."""


class UnknownAtomError(ProbdiagError):
    """Atom not present in the space's support."""


# -- diagrams ---------------------------------------------------------------

class CommutativityError(ProbdiagError):
    """Two composition paths between the same objects disagree."""


class MapError(ProbdiagError):
    """A prime map does not match the declared spaces."""


class NotMonotoneError(ProbdiagError):
    """Coordinate sets do not shrink along morphisms."""


class ShapeMismatchError(ProbdiagError):
    """Diagrams indexed by different categories."""


class NotClosedError(ProbdiagError):
    """Subset does not induce a valid sub-diagram."""


class TooLargeError(ProbdiagError):
    """Support exceeds the configured enumeration cap."""


class NotIsoError(ProbdiagError):
    """The designated map is not an isomorphism of probability spaces."""


# -- distances --------------------------------------------------------------

class CapExceededError(ProbdiagError):
    """Exact computation demanded beyond the configured size cap."""


class SliceMismatchError(ProbdiagError):
    """The two slicing fans do not share the same slicing space."""


# -- contraction ------------------------------------------------------------

class NotAdmissibleError(ProbdiagError):
    """The designated fan is not admissible."""


class NotHomogeneousError(ProbdiagError):
    """The diagram is not homogeneous (and carries no certificate)."""


class NotFanGeneratedError(ProbdiagError):
    """A space on the sample side is not the joint of its feet."""


class OutOfRangeError(ProbdiagError):
    """Numeric argument outside the stated range."""


# -- expansion --------------------------------------------------------------

class NotReducedError(ProbdiagError):
    """The designated fan is not a reduced admissible fan."""


class VerificationError(ProbdiagError):
    """A verification clause failed; the message names the clause."""


# -- cli --------------------------------------------------------------------

class ConfigError(ProbdiagError):
    """Malformed experiment configuration."""
