"""Exception types raised across the package."""


class BilayerError(Exception):
    """Base class for every error raised by this package."""


class BranchPointError(BilayerError, ValueError):
    """Spectral parameter sits on a branch point k = +-m."""


class DomainError(BilayerError, ValueError):
    """Argument outside the domain where a function is defined."""


class TailError(BilayerError, ValueError):
    """Sampled potential does not decay at the edge of the torus."""


class NearSpectrumError(BilayerError, ValueError):
    """Spectral parameter too close to the discrete free spectrum."""


class ConvergenceError(BilayerError, RuntimeError):
    """Iterative procedure did not settle."""


class SizeError(BilayerError, ValueError):
    """Problem exceeds the dense desk-scale guard."""


class NoOutliersError(BilayerError, ValueError):
    """Calibration was asked for but no complex eigenvalue was observed."""


class InsufficientDataError(BilayerError, ValueError):
    """Too few data points for a fit."""
