"""Exception types."""


class PerihypError(Exception):
    """Base class for library errors."""


class SingularSpeedError(PerihypError):
    """A characteristic speed vanished (or was not finite) during quadrature."""


class ResonanceError(PerihypError):
    """The trace system of I - calC is numerically singular."""

    def __init__(self, lam, sigma_min, norm):
        self.lam = lam
        self.sigma_min = sigma_min
        self.norm = norm
        super().__init__(f"resonance at lambda={lam:.12g}: sigma_min={sigma_min:.3e}, |A|={norm:.3e}")


class StallError(PerihypError):
    """The inner linear iteration did not converge and no fallback was available."""


class GridTooLargeError(PerihypError, ValueError):
    """Dense assembly was requested on a grid above the size cap."""


class ConfigError(PerihypError, ValueError):
    """Invalid run configuration."""
