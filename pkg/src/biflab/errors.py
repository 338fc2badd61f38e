"""Exception taxonomy.

Every numerical failure mode has its own class so that callers (and the
command line front end, which prints the class name) can tell a genuine
degeneracy of the input apart from a failure of the numerics.
"""


class BiflabError(Exception):
    """Base class for all errors raised by biflab."""

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details


class DegenerateInput(BiflabError):
    pass


class NonConvergence(BiflabError):
    """Iteration cap reached; ``details['best']`` holds the best iterate."""


class Overflow(BiflabError):
    """Symbolic composition left the representable/accurate range."""


class PeriodTooLarge(BiflabError):
    pass


class RootFindingFailed(BiflabError):
    pass


class AmbiguousPeriod(BiflabError):
    """A periodic point cannot be assigned a period (parabolic collision)."""


class IndeterminatePoint(BiflabError):
    pass


class SingularMatrix(BiflabError):
    pass


class CriticalPullback(BiflabError):
    pass


class DegenerateModuli(BiflabError):
    pass


class NotInComponent(BiflabError):
    pass


class CountMismatch(BiflabError):
    pass


class DeflationMismatch(BiflabError):
    pass


class TooManyMasked(BiflabError):
    pass


class AtomCollision(BiflabError):
    pass


class SingularJacobian(BiflabError):
    pass


class StepCollapse(BiflabError):
    pass


class LeftGuideRegion(BiflabError):
    pass
