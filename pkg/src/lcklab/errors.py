"""Exception hierarchy.

Every error raised by the library derives from :class:`LckError` so callers
(the CLI in particular) can map any mathematical precondition failure to a
single exit code.
"""


class LckError(Exception):
    """Base class for all library errors."""


class NotContraction(LckError):
    pass


class Singular(LckError):
    pass


class BranchAmbiguity(LckError):
    pass


class IllConditioned(LckError):
    pass


class DegenerateW(LckError):
    pass


class NotOnShell(LckError):
    pass


class DegenerateGradient(LckError):
    pass


class Inadmissible(LckError):
    pass


class NoBracket(LckError):
    pass


class MaxIterations(LckError):
    pass


class DegenerateCrossing(LckError):
    pass


class StepUnderflow(LckError):
    pass


class BracketNotPsh(LckError):
    pass


class DimensionUnsupported(LckError):
    pass


class NotDiagonalizable(LckError):
    pass


class NonConstantRatio(LckError):
    pass


class NoiseDominated(LckError):
    pass


class ConfigError(LckError):
    pass
