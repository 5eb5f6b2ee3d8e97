"""Exception types raised by the toolkit."""


class SymmSpecError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SymmSpecError, ValueError):
    """Malformed domain file or run configuration."""


class MeshDegenerate(SymmSpecError):
    pass


class SymmetryBroken(SymmSpecError):
    pass


class AlreadyReduced(SymmSpecError):
    pass


class PairingIncomplete(SymmSpecError):
    pass


class NoConvergence(SymmSpecError):
    def __init__(self, iterations, message=None):
        self.iterations = iterations
        super().__init__(message or f"eigensolver did not converge after {iterations} restarts")


class SingularShift(SymmSpecError):
    pass


class DomainError(SymmSpecError, ValueError):
    pass


class BracketingFailed(SymmSpecError):
    pass


class CoincidentPoints(SymmSpecError, ValueError):
    pass


class EvaluationTooClose(SymmSpecError, ValueError):
    pass


class MissingVectors(SymmSpecError):
    pass
