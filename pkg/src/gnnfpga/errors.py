"""Exception types raised by the simulator."""


class GnnFpgaError(ValueError):
    """Base class for every error the simulator raises on bad input."""


class FormatMismatchError(GnnFpgaError):
    pass


class ShapeError(GnnFpgaError):
    pass


class DatasetError(GnnFpgaError):
    pass


class ConfigError(GnnFpgaError):
    pass


class FileFormatError(GnnFpgaError):
    pass
