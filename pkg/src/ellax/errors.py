"""Exception hierarchy shared by all subpackages."""


class EllaxError(Exception):
    """Base class for every error raised by the package."""


class DegenerateLattice(EllaxError):
    pass


class PoleAtLatticePoint(EllaxError):
    pass


class JetFailure(EllaxError):
    """A Laurent jet could not be computed to the requested accuracy."""


class ContourHitsPole(JetFailure):
    pass


class NoisyJet(JetFailure):
    pass


class DegenerateConfiguration(EllaxError):
    pass


class NonGenericTyurinData(EllaxError):
    pass


class NoSolution(EllaxError):
    pass


class AmbiguousSolution(EllaxError):
    pass


class PoleAtZ(EllaxError):
    """The spectral parameter sits on a pole of a Lax matrix."""


class StencilHitsPole(EllaxError):
    pass


class CollisionDetected(EllaxError):
    pass


class StepRejected(EllaxError):
    pass


class ConfigError(EllaxError):
    """Invalid run configuration; carries the offending field path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
