"""Error taxonomy shared across the package.

UsageError   -> bad arguments / configuration (CLI exit code 2)
DomainError  -> points outside the admissible region (CLI exit code 2)
NumericalError -> quadrature or root iteration failed to converge (CLI exit code 3)
"""


class UsageError(ValueError):
    pass


class DomainError(UsageError):
    pass


class NumericalError(RuntimeError):
    pass


class QuadratureWarning(UserWarning):
    """Requested tolerance not certified; message carries the achieved estimate."""
