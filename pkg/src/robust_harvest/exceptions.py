"""Exception types raised across the package."""


class InputError(ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(ValueError):
    """A model parameter violates a structural requirement."""


class ConfigurationError(ValueError):
    """A run configuration is inconsistent or cannot be satisfied."""


class CFLViolation(ValueError):
    """The time step exceeds the sufficient stability bound of the scheme."""

    def __init__(self, dt, bound):
        self.dt = dt
        self.bound = bound
        super().__init__(
            f"time step {dt!r} exceeds the CFL bound {bound!r}; "
            "pass override_cfl=True to run anyway"
        )


class CFLWarning(UserWarning):
    """Emitted when a run proceeds past a CFL violation on request."""


class NumericalFailure(FloatingPointError):
    """A non-finite value appeared during the backward sweep."""

    def __init__(self, i, j, value):
        self.i = i
        self.j = j
        self.value = value
        super().__init__(f"non-finite value {value!r} at node (i={i}, j={j})")
