"""Exception types shared across the package."""


class SpaceMismatchError(ValueError):
    """Raised when objects built on different sample spaces are combined."""


class MeasurabilityError(ValueError):
    """Raised when an event or function is not measurable where it must be."""


class EnumerationLimitError(RuntimeError):
    """Raised when enumerating the members of an algebra would exceed the cap."""
