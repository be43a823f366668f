"""Exception hierarchy shared by all modules."""


class NHTError(Exception):
    """Base class for all library errors."""


class ParameterError(NHTError, ValueError):
    pass


class ShapeError(NHTError, ValueError):
    pass


class DomainError(NHTError, ValueError):
    pass


class InputError(NHTError, ValueError):
    pass


class CapabilityError(NHTError):
    """Problem size exceeds what a dense method is allowed to handle."""


class NumericalError(NHTError, ArithmeticError):
    """Base for failures of a numerical method on a particular instance."""


class ConditioningError(NumericalError):
    pass


class NumericalBlowupError(NumericalError):
    pass


class DegenerateStateError(NumericalError):
    pass


class SingularFlowError(NumericalError):
    pass


class NoFixedPointError(NHTError):
    pass


class FitError(NHTError, ValueError):
    pass


class RangeError(NHTError, ValueError):
    pass


class ConfigError(NHTError, ValueError):
    pass
