"""Exception types raised by nsmreg."""


class NsmError(ValueError):
    """Base class for all input/contract errors in this package."""


class DimensionError(NsmError):
    pass


class DatasetError(NsmError):
    """Malformed or inconsistent dataset (bad CSV row, point outside the box, ...)."""


class InsufficientDataError(DatasetError):
    pass


class InfiniteSlopeError(DatasetError):
    """Two samples share a feature vector but carry different labels."""


class LipschitzError(NsmError):
    """Lipschitz estimate is not positive or is below the data-implied bound."""


class ModelMismatchError(NsmError):
    pass


class ConfigError(NsmError):
    pass
