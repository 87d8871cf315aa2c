import numpy as np
import pytest

from torusgap import SolverConfig, make_grid, random_divfree, run, taylor_green


@pytest.fixture(scope="session")
def grid32():
    return make_grid(2, 32)


@pytest.fixture(scope="session")
def tg32_traj(grid32):
    """Small Taylor-Green run shared by the unit tests."""
    cfg = SolverConfig(grid=grid32, m=8, dt=2e-3, T=0.5)
    return run(cfg, taylor_green(grid32))


@pytest.fixture(scope="session")
def rand32_traj(grid32):
    """Nonlinear random run at desk scale (rk4 so identities are tight)."""
    v0 = random_divfree(grid32, spectrum_slope=-3.0, seed=11, amplitude=3.0, k_cut=8)
    cfg = SolverConfig(grid=grid32, m=8, dt=1e-3, T=0.4, integrator="rk4")
    return run(cfg, v0)


def piecewise_linear_series(knots_t, knots_d, h):
    """Sample a piecewise-linear curve on a uniform grid of step h."""
    t = np.arange(0.0, knots_t[-1] + h / 2, h)
    return t, np.interp(t, knots_t, knots_d)


def consistent_energy(t, d, e0=10.0):
    """Energy series with exact two-point balance against the sampled d.

    Panel integrals of the linear interpolant are exact trapezoids, so the
    returned samples satisfy E(t_j) = E(t_i) - 2 int d for every pair.
    """
    panels = 0.5 * (d[1:] + d[:-1]) * np.diff(t)
    return e0 - 2.0 * np.concatenate([[0.0], np.cumsum(panels)])
