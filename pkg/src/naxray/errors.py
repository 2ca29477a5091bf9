"""Exception types raised across the package."""


class NaxrayError(Exception):
    """Base class for all package errors."""


class DomainError(NaxrayError, ValueError):
    """An input lies outside the domain where an operation is defined."""


class SingularError(NaxrayError, ArithmeticError):
    """A matrix that must be inverted is (numerically) singular."""


class MissingRay(NaxrayError, LookupError):
    """A measurement was requested for a ray the data source does not hold."""

    def __init__(self, ray, detail=""):
        self.ray = ray
        msg = f"no measurement for ray {ray}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)

    def __str__(self):
        return self.args[0]


class OffCenterIncidence(NaxrayError, ValueError):
    """A ray crosses a regularized-delta ball without passing through its center."""
