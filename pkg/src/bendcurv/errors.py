"""Exception hierarchy shared by all bendcurv modules."""


class BendcurvError(Exception):
    """Base class for every error raised by the package."""

    #: exit code used by the command line runner
    exit_code = 3


class DegenerateChart(BendcurvError):
    """The chart is not an immersion at the requested parameter."""


class DomainExit(BendcurvError):
    """A traced path left the (non-periodic part of the) chart domain."""


class OutsideTube(BendcurvError):
    """Nearest-point retraction failed: the point is outside the tubular neighbourhood."""


class NonManifoldEdge(BendcurvError):
    pass


class NonOrientable(BendcurvError):
    pass


class DegenerateFacet(BendcurvError):
    pass


class ParseError(BendcurvError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AmbiguousOrientation(BendcurvError):
    pass


class FoldedEdge(BendcurvError):
    """Two facets fold onto each other; the average edge normal is undefined."""


class ProfileOverturn(BendcurvError):
    pass


class RigidConfiguration(BendcurvError):
    pass


class BranchPoint(BendcurvError):
    def __init__(self, message, last_t=None):
        self.last_t = last_t
        super().__init__(message)


class ConfigError(BendcurvError):
    exit_code = 2

    def __init__(self, message, violations=None):
        self.violations = list(violations or [])
        super().__init__(message)
