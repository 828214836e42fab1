"""Exception types raised across grasplab."""


class GraspLabError(Exception):
    """Base class for all grasplab errors."""


class ConfigError(GraspLabError, ValueError):
    """Invalid configuration or argument combination."""


class PlacementExhausted(GraspLabError):
    pass


class UnknownObject(GraspLabError, KeyError):
    pass


class OpeningOutOfRange(GraspLabError, ValueError):
    pass


class PhiOutOfRange(GraspLabError, ValueError):
    pass


class ShapeMismatch(GraspLabError, ValueError):
    pass


class EmptyDataset(GraspLabError):
    pass


class ChecksumMismatch(GraspLabError):
    pass


class VersionMismatch(GraspLabError):
    pass


class ModelLoadError(GraspLabError):
    pass


class InsufficientSource(GraspLabError):
    pass


class ManifestMismatch(GraspLabError):
    pass


class NonPositiveTime(GraspLabError, ValueError):
    pass


class NoForeground(GraspLabError):
    pass
