"""Exception hierarchy shared by all modules."""


class IholabError(Exception):
    """Base class for library errors."""


class InvalidDimensionError(IholabError, ValueError):
    pass


class InvalidParameterError(IholabError, ValueError):
    pass


class ConfigurationError(IholabError, ValueError):
    pass


class MatrixOverflowError(IholabError, OverflowError):
    """Matrix function produced non-finite entries."""

    def __init__(self, message: str, norm: float):
        super().__init__(f"{message} (input 1-norm {norm:.6g})")
        self.norm = norm


class ConditioningError(IholabError, ArithmeticError):
    """A solve or pairing is too ill-conditioned to trust in double precision."""

    def __init__(self, message: str, condition_estimate: float):
        super().__init__(f"{message} (condition estimate {condition_estimate:.3g})")
        self.condition_estimate = condition_estimate


class WaveOverflowError(IholabError, OverflowError):
    pass


class TruncationError(IholabError, ValueError):
    def __init__(self, message: str, required_dim: int):
        super().__init__(f"{message}; need dim >= {required_dim}")
        self.required_dim = required_dim


class RangeError(IholabError, ValueError):
    pass


class DegenerateStateError(IholabError, ArithmeticError):
    pass


class NumericalConsistencyError(IholabError, ArithmeticError):
    pass


class PreconditionError(IholabError, ValueError):
    def __init__(self, message: str, defect: float):
        super().__init__(f"{message} (defect {defect:.3g})")
        self.defect = defect
