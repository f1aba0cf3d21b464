"""Exception types shared across the modeling kernel."""


class DassError(Exception):
    """Base class for all kernel errors."""


# --- implicit surface -------------------------------------------------------

class TooFewSamples(DassError):
    pass


class SingularSystem(DassError):
    pass


class NoConvergence(DassError):
    """Surface projection did not reach tolerance; carries the last iterate."""

    def __init__(self, message, last_point=None):
        super().__init__(message)
        self.last_point = last_point


class ZeroGradient(DassError):
    pass


# --- mesh / stellar operators ----------------------------------------------

class IllegalSplit(DassError):
    pass


class NotWeldable(DassError):
    pass


# --- atlas -------------------------------------------------------------------

class NotRegular(DassError):
    pass


class UvOutsideChart(DassError):
    pass


class NotAdjacent(DassError):
    pass


class InvalidBaseMesh(DassError):
    pass


# --- planar tesel editing ----------------------------------------------------

class DegenerateBBox(DassError):
    pass


class WouldDegenerate(DassError):
    pass


class InvalidId(DassError):
    pass


class NoRootFound(DassError):
    """Lift could not find surface roots; carries the offending vertex keys."""

    def __init__(self, message, vertices=()):
        super().__init__(message)
        self.vertices = list(vertices)


# --- detail layer -------------------------------------------------------------

class EmptyStroke(DassError):
    pass


# --- session -------------------------------------------------------------------

class PhaseError(DassError):
    pass


class ReplayError(DassError):
    """A command log line failed to parse or apply."""

    def __init__(self, line_no, message, cause=None):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.cause = cause
