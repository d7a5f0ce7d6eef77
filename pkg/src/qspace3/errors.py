"""Exception hierarchy shared by all modules."""


class QSpaceError(Exception):
    """Base class for all qspace3 errors."""


class DomainError(QSpaceError):
    """Arguments outside the mathematical domain of an operation."""


class WindowError(DomainError):
    """A truncation window is inconsistent with the requested construction."""


class CoverageError(WindowError):
    """A window is too small to cover the requested labels."""


class PoleError(DomainError):
    """A lower Pochhammer factor vanished before a series terminated."""


class PrecisionError(QSpaceError):
    """A series or product failed to converge within the configured budget."""
