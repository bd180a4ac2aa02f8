"""Exception hierarchy shared by all modules and mapped to CLI exit codes."""


class LidarFogError(Exception):
    """Base class for all library errors."""


class DomainError(LidarFogError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedRegimeError(DomainError):
    """Inputs are valid physically but outside the supported numeric regime."""


class AccuracyError(LidarFogError):
    """A quadrature failed its refinement check.

    ``estimates`` holds the last two estimates (coarse, fine).
    """

    def __init__(self, message, estimates):
        super().__init__(message)
        self.estimates = tuple(estimates)


class MalformedFileError(LidarFogError, ValueError):
    """A point-cloud file does not follow the KITTI velodyne layout."""

    def __init__(self, path, offset, message=None):
        self.path = path
        self.offset = offset
        super().__init__(message or f"{path}: trailing partial record at byte offset {offset}")


class PresetLookupError(LidarFogError, KeyError):
    """Unknown preset name, or a preset/mode combination with no definition."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
