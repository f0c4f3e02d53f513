"""Exception types raised by the wave-packet laboratory."""


class SdwaveError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateWaveNumber(SdwaveError, ValueError):
    """The dispersion relation vanishes (or nearly) at the requested wave number."""


class QuadratureNotConverged(SdwaveError, RuntimeError):
    """A refinement-controlled quadrature failed to meet its tolerance."""


class ZeroModeSignificant(SdwaveError, ValueError):
    """The xi = 0 dual mode carries non-negligible packet amplitude."""


class ZeroMass(SdwaveError, ValueError):
    """A diagnostic needing a positive field mass received a null field."""


class UnstableStep(SdwaveError, ValueError):
    """Leapfrog time step exceeds the CFL limit h / sqrt(d)."""


class CutoffMassSignificant(SdwaveError, ValueError):
    """Spectral mass outside the shifted Brillouin zone exceeds the tolerance."""


class InsufficientSamples(SdwaveError, ValueError):
    """Not enough time samples for central time differencing."""


class DegenerateObservation(SdwaveError, FloatingPointError):
    """Observed energy underflowed; the quotient is flagged infinite."""


class ConfigError(SdwaveError, ValueError):
    """Invalid experiment configuration."""
