"""Exception and warning types raised by the numerical routines."""


class XYQuenchError(Exception):
    """Base class for numerical failures (CLI exit code 3)."""


class GaplessMode(XYQuenchError, ValueError):
    """A momentum mode sits on a gapless point, so its Bogoliubov angle is undefined."""


class QuadratureFailure(XYQuenchError):
    """Adaptive subdivision hit its interval cap before meeting the tolerance."""


class UnsupportedRegime(XYQuenchError):
    """No closed form is available for the requested parameter region."""


class InvalidLimit(XYQuenchError):
    """The large-time approximation is not valid at the requested point."""


class DerivativeStencilFailure(XYQuenchError):
    """Richardson levels of a finite-difference derivative disagree."""


class SingularMetric(XYQuenchError):
    """Metric determinant vanishes, so the connection cannot be formed."""


class NoRealVelocity(XYQuenchError):
    """The normalisation condition has no real solution for dt/dtau."""


class InsufficientData(XYQuenchError, ValueError):
    """Too few samples for a regression."""


class ConfigError(Exception):
    """Bad or unknown configuration key (CLI exit code 2)."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ResonanceClamped(RuntimeWarning):
    """A mode hit exact resonance and its echo factor was clamped."""


class NonMonotone(XYQuenchError):
    """h(tau) turns around; only a monotone prefix of the geodesic can be inverted."""

    def __init__(self, message: str, prefix: int):
        self.prefix = prefix
        super().__init__(message)
