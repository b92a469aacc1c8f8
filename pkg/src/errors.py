"""
Exceptions raised by the spectra toolkit.

Every error carries the offending object on attributes so the CLI can
print an actionable message.
"""


class SpectraError(Exception):
    """Base class for all toolkit errors."""

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context
        for key, value in context.items():
            setattr(self, key, value)


class ConfigError(SpectraError):
    pass


class InvalidMapSpec(SpectraError):
    pass


class NonMaximalPartition(InvalidMapSpec):
    pass


# map_core
class OutOfDomain(SpectraError):
    pass


class NoAdjacentBranch(SpectraError):
    pass


class DepthTooLarge(SpectraError):
    pass


class RootIsolationFailure(SpectraError):
    pass


class NotExpanding(SpectraError):
    pass


class UndecidableSign(SpectraError):
    pass


# orbits
class UndecidableAtDepth(SpectraError):
    pass


class TruncationTooShallow(SpectraError):
    pass


class PointOnBoundary(SpectraError):
    pass


class ZeroWeightOnOrbit(SpectraError):
    pass


# observables / transfer
class UntaggedJump(SpectraError):
    pass


class DegreeOverflow(SpectraError):
    pass


class ApproximationError(SpectraError):
    pass


class PreconditionK0(SpectraError):
    pass


class WeightVanishes(SpectraError):
    pass


# dual certificates
class ZeroWeight(SpectraError):
    pass


class NoGammaPreimage(SpectraError):
    pass


class NormalizationZero(SpectraError):
    pass


class LambdaTooLarge(SpectraError):
    pass


# bounds and examples
class PrecisionInsufficient(SpectraError):
    pass


class PeriodicItinerary(SpectraError):
    pass


class LambdaTildeTooSmall(SpectraError):
    pass


class GapBelowBound(SpectraError):
    pass


# ulam
class DegenerateBin(SpectraError):
    pass


class SolverFailure(SpectraError):
    pass
