"""Exception types shared across the package."""


class TorusGapError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TorusGapError):
    """Malformed or incomplete experiment configuration."""


class CflError(TorusGapError):
    """Advective CFL violation; carries a stable step suggestion."""

    def __init__(self, cfl: float, dt: float, suggested_dt: float):
        self.cfl = cfl
        self.dt = dt
        self.suggested_dt = suggested_dt
        super().__init__(
            f"advective CFL {cfl:.3g} exceeds the stability limit at dt={dt:g}; "
            f"suggested dt <= {suggested_dt:.3g}"
        )


class SampleGridError(TorusGapError):
    """Requested instant is not on the trajectory sample grid."""


class DegenerateTrajectoryError(TorusGapError):
    """An identity denominator vanished (no energy drop, zero field, ...)."""


class PreconditionError(TorusGapError):
    """An operation's stated precondition does not hold for these inputs."""
