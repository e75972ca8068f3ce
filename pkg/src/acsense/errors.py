"""Exception hierarchy shared by all modules."""


class SensorError(Exception):
    """Base class for every error raised by acsense."""


class InvalidDimensionError(SensorError, ValueError):
    pass


class ContractViolationError(SensorError, ValueError):
    pass


class UnsupportedOrderError(SensorError, ValueError):
    pass


class OutOfRangeError(SensorError, ValueError):
    pass


class DomainError(SensorError, ValueError):
    pass


class ConfigurationError(SensorError, ValueError):
    pass


class InvalidModelError(SensorError, ValueError):
    pass


class InvalidStateError(SensorError, ValueError):
    pass


class UndefinedConditionalError(SensorError, ValueError):
    pass


class StepSizeError(SensorError, RuntimeError):
    """Integrator accuracy contract broken; retry with a smaller step."""
