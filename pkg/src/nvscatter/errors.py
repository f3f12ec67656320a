"""Exception hierarchy shared by the library and the command line tool."""


class NVError(Exception):
    """Base class for all errors raised by nvscatter."""

    exit_code = 3


class ConfigurationError(NVError, ValueError):
    """Invalid grid, config file, or parameter combination."""

    exit_code = 2


class PotentialSpecError(ConfigurationError):
    """A potential specification that cannot be realised (e.g. sigma <= 0)."""


class NumericalError(NVError, RuntimeError):
    """A solver failed to converge or produced non-finite values."""

    def __init__(self, message, stage=None, residual=None):
        super().__init__(message)
        self.stage = stage
        self.residual = residual


class SymmetryViolation(NumericalError):
    """Reconstructed potential is not real within tolerance."""


class ClassificationConflict(NumericalError):
    """Positive solution changes sign although the form looked nonnegative."""


class InstabilityError(NumericalError):
    """Direct time integration blew up."""


class SupercriticalRefusal(NVError):
    """Inverse scattering refused for a supercritical potential."""

    exit_code = 4
