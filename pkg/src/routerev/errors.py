"""Exception hierarchy shared by every module."""


class RouteRevError(Exception):
    """Base class for all toolkit errors."""


# geometry
class CoincidentPoints(RouteRevError, ValueError):
    pass


class DegenerateRoute(RouteRevError, ValueError):
    pass


# graph
class InvalidDimension(RouteRevError, ValueError):
    pass


class ParseError(RouteRevError, ValueError):
    def __init__(self, message, line=None):
        self.message = message
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DanglingNode(ParseError):
    pass


class EmptyGraph(RouteRevError, ValueError):
    pass


class Unreachable(RouteRevError):
    pass


class NotAPath(RouteRevError, ValueError):
    pass


# instruction language
class UnparseableLine(RouteRevError, ValueError):
    def __init__(self, line):
        super().__init__(f"cannot parse instruction: {line!r}")
        self.line = line


class EmptyResponse(RouteRevError, ValueError):
    pass


# pathbuilder
class MissingInitialBearing(RouteRevError, ValueError):
    pass


class EmptyCommandSequence(RouteRevError, ValueError):
    pass


class NetDisplacementTooSmall(RouteRevError, ValueError):
    pass


# dataset
class DegenerateExtrema(RouteRevError, ValueError):
    pass


class InsufficientRecords(RouteRevError):
    pass


class GraphTooSmall(RouteRevError):
    pass


# metrics
class ZeroLengthReference(RouteRevError, ValueError):
    pass


class EmptyUnion(RouteRevError, ValueError):
    pass


class UnknownMetric(RouteRevError, KeyError):
    pass


# harness
class InsufficientTrials(RouteRevError, ValueError):
    pass


class NoDirectionTokens(RouteRevError, ValueError):
    pass


class TransportError(RouteRevError):
    pass


class FixtureMissing(RouteRevError):
    pass


class ConfigError(RouteRevError, ValueError):
    pass
