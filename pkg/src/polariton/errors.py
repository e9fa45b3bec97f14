"""Exception hierarchy.

Everything raised on purpose derives from :class:`PolaritonError`, so the CLI
can map physics/solver failures to exit code 1 in one place.
"""


class PolaritonError(Exception):
    pass


class ParameterError(PolaritonError, ValueError):
    """Input outside the physical parameter domain."""


class InstabilityError(PolaritonError):
    """A squared eigenfrequency went negative (mode softening)."""

    def __init__(self, branch, omega_squared):
        self.branch = branch
        self.omega_squared = omega_squared
        super().__init__(
            f"{branch} branch is unstable: squared eigenenergy {omega_squared:.6g} meV^2 <= 0 "
            "(diamagnetic constant below omega_r**2 / e_12?)"
        )


class NumericalError(PolaritonError):
    """Residual check on a diagonalization failed."""


class RangeError(PolaritonError, ValueError):
    """Request outside a tabulated model's range."""


class ResonanceNotFoundError(PolaritonError):
    pass


class BracketError(PolaritonError):
    def __init__(self, message, interval):
        self.interval = interval
        super().__init__(f"{message}; scanned interval [{interval[0]:.6g}, {interval[1]:.6g}] meV")


class ConvergenceError(PolaritonError):
    def __init__(self, message, estimates=None):
        self.estimates = estimates
        super().__init__(message)


class EmptyInputError(PolaritonError, ValueError):
    pass


class UnresolvablePointsError(PolaritonError):
    def __init__(self, failures):
        # failures: list of (index, point, error message)
        self.failures = failures
        lines = [f"  #{i}: {p} -> {msg}" for i, p, msg in failures]
        super().__init__(f"{len(failures)} data point(s) could not be resolved:\n" + "\n".join(lines))


class ConfigError(PolaritonError, ValueError):
    """Malformed or invalid run configuration (CLI usage error)."""


class DataFormatError(PolaritonError, ValueError):
    """Malformed CSV input."""
