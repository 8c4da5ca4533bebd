"""Exception hierarchy shared by all modules."""


class ArtifactError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ArtifactError):
    """Malformed or inconsistent input data."""


class ComputeError(ArtifactError):
    """A numerical pipeline failed to produce a result."""


class QuadratureDivergence(ComputeError):
    pass


class DegenerateConfiguration(ComputeError):
    pass


class PathThroughBranchPoint(ComputeError):
    pass


class PoleOnContour(ComputeError):
    pass


class NotSymplectic(ComputeError):
    pass


class NewtonDivergence(ComputeError):
    pass


class DegenerateDivisor(ComputeError):
    pass


class HalfIntegerInput(ComputeError):
    pass


class SingularAlphaSystem(ComputeError):
    pass


class EvaluationAtPole(ComputeError):
    pass


class RootFindingFailure(ComputeError):
    pass


class MultipleZeroDetected(ComputeError):
    pass


class OkamotoSingularity(ComputeError):
    pass


class GridTooCoarse(ComputeError):
    pass


class VanishingA12(ComputeError):
    pass


class DegenerateZeros(ComputeError):
    pass


class HalfIntegerCharacteristic(ComputeError):
    pass


class DegeneratePoint(ComputeError):
    pass


class OffQuadric(ComputeError):
    pass


class TangencyDegenerate(ComputeError):
    pass


class NoIntersection(ComputeError):
    pass


class SignatureViolation(ComputeError):
    pass


class ExpansionRadiusTooSmall(ComputeError):
    pass
