"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition (shape, finiteness, Hermiticity, ...)."""


class ResourceLimitError(InvalidInputError):
    """Requested object exceeds the configured size cap."""


class BlockLeakageError(InvalidInputError):
    """Too much weight outside the system block of an ancilla state."""

    def __init__(self, leaked_mass: float, tol: float):
        self.leaked_mass = leaked_mass
        self.tol = tol
        super().__init__(f"off-block mass {leaked_mass:.3e} exceeds tolerance {tol:.1e}")
