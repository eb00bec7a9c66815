"""Exception types raised across the package."""


class OutpaintError(Exception):
    pass


class InvalidInputError(OutpaintError, ValueError):
    pass


class GeometryError(InvalidInputError):
    """Mask geometry that cannot be realised on the frame."""


class ShapeError(InvalidInputError):
    pass


class ImageDecodeError(OutpaintError, OSError):
    def __init__(self, path, reason=""):
        self.path = str(path)
        msg = f"cannot decode image {self.path}"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class NumericError(OutpaintError, ArithmeticError):
    pass


class ConfigError(OutpaintError, ValueError):
    pass


class CheckpointError(OutpaintError):
    pass


class IncompatibleCheckpointError(CheckpointError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass
