"""torusgap: energy-balance gap diagnostics for mollified incompressible flow.

A desk-scale numerical laboratory: a pseudo-spectral solver for the
mollified Navier-Stokes system on the periodic torus, exact energy-ledger
diagnostics, weighted gap functionals with ladder extrapolation, a
level-band excursion analyzer, and a verifier for the weighted
dominated-convergence limits the diagnostics rely on.
"""

__version__ = "0.1.0"

from .fields import (  # noqa: F401
    Grid,
    SpectralField,
    make_grid,
    leray_project,
    l2_norm_sq,
    grad_norm_sq,
    mollify,
    taylor_green,
    random_divfree,
    single_mode,
)
from .solver import SolverConfig, Trajectory, rhs, step, run, exact_dDdt  # noqa: F401
