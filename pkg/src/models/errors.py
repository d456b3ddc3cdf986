class PnPError(Exception):
    """Base error for the solver library.

    Carries the module that raised it (used to qualify CLI messages) and the
    process exit code the CLI reports for it.
    """

    exit_code = 3

    def __init__(self, message: str, *, module: str = "core"):
        super().__init__(message)
        self.message = message
        self.module = module

    def __str__(self) -> str:
        return f"[{self.module}] {self.message}"


class ConfigurationError(PnPError):
    exit_code = 2


class DimensionError(PnPError):
    """Shape or length mismatch between rasters, measurements and operators."""


class DomainError(PnPError):
    """Input outside the domain of an operation (e.g. negative pixels)."""


class DegenerateOperatorError(PnPError):
    """Some pixel is unseen by the operator (zero sensitivity)."""


class SingularAnchorError(PnPError):
    """Anchor projects to zero on a bin with a positive count."""


class UndefinedMetricError(PnPError):
    pass


class RasterFormatError(PnPError):
    exit_code = 4


class RasterIOError(PnPError):
    exit_code = 4
