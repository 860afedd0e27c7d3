"""Exception hierarchy shared by all modules."""


class BetaSpectraError(Exception):
    """Base class for numerical failures reported by the library."""


class AmbiguousDigit(BetaSpectraError):
    """A digit could not be decided at the working precision."""


class InsufficientDigits(BetaSpectraError):
    pass


class InadmissibleWord(BetaSpectraError):
    pass


class DomainError(BetaSpectraError, ValueError):
    pass


class NearPole(BetaSpectraError):
    pass


class TooLarge(BetaSpectraError):
    pass


class BoundaryZero(BetaSpectraError):
    """A zero lies too close to an integration contour."""


class NonConvergence(BetaSpectraError):
    pass


class BranchLoss(BetaSpectraError):
    pass


class DegenerateOrbit(BetaSpectraError):
    pass


class NotSimple(BetaSpectraError):
    pass


class DegenerateBreakpoints(BetaSpectraError):
    pass


class Underflow(BetaSpectraError):
    pass


class VerificationFailure(BetaSpectraError):
    def __init__(self, clause, message):
        super().__init__(f"clause ({clause}): {message}")
        self.clause = clause
