"""Exception hierarchy shared by all modules."""


class RRError(Exception):
    """Base class for errors raised by rrembed."""


class ConfigurationError(RRError, ValueError):
    """Invalid or inconsistent setup (grid too small, kernel too short, ...)."""


class NumericalError(RRError, RuntimeError):
    """A numerical procedure failed to meet its accuracy contract."""


class UnderResolvedError(NumericalError):
    """The spectral grid does not resolve a resonance of the Green function."""


class PoleOnGridError(NumericalError):
    """The dressed Green function has a pole exactly on a frequency sample."""


class SingularDensityError(NumericalError):
    """Clausius-Mossotti local-field denominator vanishes."""


class StabilityError(NumericalError):
    """Norm drift during propagation exceeded its bound."""


class ConventionError(NumericalError):
    """Fourier data violate the Hermitian symmetry required for real kernels."""


class SetupError(RRError, ValueError):
    """Physical setup does not satisfy an experiment's preconditions."""


class UnitError(ConfigurationError):
    """A quantity was given in units incompatible with its key."""
