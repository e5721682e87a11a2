"""Exception and warning types shared across the package."""


class BlochWkbError(Exception):
    """Base class for all package-specific errors."""


class IsolatednessViolation(BlochWkbError):
    """A band gap fell below the tolerance needed for single-band analysis."""


class PostCaustic(BlochWkbError):
    """A field or transform was requested at or beyond the first caustic."""


class EdgeLeakage(BlochWkbError):
    """The wave field reached the edge of the periodic box."""


class NlsOverflow(BlochWkbError):
    """The complex-coupling solver blew past the overflow threshold.

    Carries the last time at which the field was still finite.
    """

    def __init__(self, message: str, last_valid_time: float):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class GridResolutionError(BlochWkbError):
    """A wave grid does not resolve the fast scale for the requested epsilon."""


class ConfigError(BlochWkbError):
    """A scenario configuration file is missing or malformed."""


class ZoneFoldWarning(UserWarning):
    """A ray momentum left the fundamental zone and was folded back."""


class ExtrapolationWarning(UserWarning):
    """Grid points fell outside the ray fan and were zero-filled."""
