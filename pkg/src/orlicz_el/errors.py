"""Exception hierarchy shared by all modules."""


class OrliczError(Exception):
    """Base class for every error raised by this package."""


class BadParam(OrliczError, ValueError):
    pass


class NonMonotoneDerivative(OrliczError):
    pass


class DomainOverflow(OrliczError, OverflowError):
    pass


class ProbeOverflow(DomainOverflow):
    pass


class Delta2Violated(OrliczError):
    pass


class NoViolationFound(OrliczError):
    pass


class MalformedSequence(OrliczError, ValueError):
    pass


class IndexViolated(OrliczError):
    pass


class BracketExpansionFailed(OrliczError):
    pass


class EvaluatorFailure(OrliczError):
    pass


class OverflowInRatio(OrliczError, OverflowError):
    pass


class HypothesisRejected(OrliczError):
    def __init__(self, message, gate=None):
        super().__init__(message)
        self.gate = gate


class NotConverged(OrliczError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(OrliczError, ValueError):
    pass
