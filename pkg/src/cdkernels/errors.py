"""Exception types shared across the package."""


class KernelOverflowError(ArithmeticError):
    """A recurrence value exceeded the 1e300 overflow guard."""


class HorizonError(IndexError):
    """A coefficient beyond the model's working horizon was requested."""


class DomainError(ValueError):
    """A spectral parameter lies outside the function's domain."""


class ScaleError(ValueError):
    """The kernel scale at the base point is still too small to rescale by."""


class IntegrationError(ArithmeticError):
    """The ODE integrator could not meet its error tolerance."""


class ReparametrizationError(ValueError):
    """The trace of a Hamiltonian vanishes on a whole segment."""


class StallError(RuntimeError):
    """Weyl disks stopped shrinking before reaching the requested radius."""

    def __init__(self, message: str, last_radius: float):
        super().__init__(message)
        self.last_radius = last_radius
