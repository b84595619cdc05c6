class GraspCtxError(Exception):
    """Base class for errors raised by graspctx."""


class FormatError(GraspCtxError, ValueError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CloudFormatError(FormatError):
    pass


class FrameFormatError(FormatError):
    pass


class SceneFormatError(FormatError):
    pass


class CloudIOError(GraspCtxError, OSError):
    pass


class GeometryError(GraspCtxError):
    """A geometric construction is degenerate for the given input."""


class DegenerateHullError(GeometryError):
    pass


class DegenerateClusterError(GeometryError):
    pass


class GravityEstimationError(GraspCtxError):
    """No accelerometer sample passed the quasi-static magnitude gate."""


class ConfigError(GraspCtxError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
