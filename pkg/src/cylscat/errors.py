"""Exception types raised by cylscat."""


class CylscatError(Exception):
    """Base class for all library errors."""


class ThresholdCollision(CylscatError):
    """Some transverse mode sits within ``delta_thr`` of the threshold h^2 m^2 = 1."""


class NotHourglass(CylscatError):
    pass


class IntegratorFailure(CylscatError):
    pass


class QuadratureFailure(CylscatError):
    pass


class Trapped(CylscatError):
    """The trajectory did not return to the section before the horizon."""

    def __init__(self, message, t_max=None):
        super().__init__(message)
        self.t_max = t_max


class GridTooCoarse(CylscatError):
    pass


class NonUnitary(CylscatError):
    pass


class NonUnitaryInput(CylscatError):
    pass


class BoundaryContamination(CylscatError):
    """Wave amplitude reached the edge of the computational box."""


class TooCloseToEdge(CylscatError):
    """Coherent-state centre too close to |eta| = 1."""


class NonConvergedPowerIteration(CylscatError):
    pass


class ConfigError(CylscatError):
    pass


class DegenerateState(CylscatError):
    """Husimi mass split between the ends is worse than 60/40."""
