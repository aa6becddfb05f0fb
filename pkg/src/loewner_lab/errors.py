"""Exception hierarchy shared by all modules."""


class LoewnerLabError(Exception):
    """Base class for every error raised by the package."""


class DomainError(LoewnerLabError):
    pass


class BranchError(LoewnerLabError):
    pass


class DegenerateError(LoewnerLabError):
    pass


class NotSimple(LoewnerLabError):
    pass


class StepTooLarge(LoewnerLabError):
    pass


class NonFinite(LoewnerLabError):
    pass


class TipCollision(LoewnerLabError):
    pass


class HullHit(LoewnerLabError):
    pass


class ResolutionTooCoarse(LoewnerLabError):
    pass


class TruncationDominates(LoewnerLabError):
    pass


class TailNotDecaying(LoewnerLabError):
    pass


class InvalidInput(LoewnerLabError):
    """Malformed files or arguments violating a type invariant."""
