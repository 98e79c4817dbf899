"""Exception types shared across the package."""


class StereoARError(Exception):
    """Base class for all errors raised by this package."""


class NoProjection(StereoARError):
    """A 3D point lies outside the camera's field of view."""


class DimensionMismatch(StereoARError):
    """Two images or buffers that must agree in size do not."""


class ParseError(StereoARError):
    """A model, calibration or correspondence file is malformed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class UnsupportedFeature(StereoARError):
    """The input uses a feature this implementation deliberately omits."""


class ConfigError(StereoARError):
    """A scene configuration is invalid; the message names the offending key."""


class RankDeficient(StereoARError):
    """A least-squares design matrix is singular or underdetermined."""


class EndOfStream(StereoARError):
    """A frame source has no more frames."""


class ReadError(StereoARError):
    """A frame or image could not be read; the message names the path."""


class ReadBeforeFirstDeposit(StereoARError):
    """A mailbox was read before any frame pair was deposited."""
