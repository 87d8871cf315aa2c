import itertools

import numpy as np
import pytest

from torusgap.errors import CflError, SampleGridError
from torusgap.fields import (
    field_from_coeffs,
    l2_norm_sq,
    make_grid,
    random_divfree,
    single_mode,
    taylor_green,
    wavevectors,
)
from torusgap.quadrature import trapezoid
from torusgap.solver import (
    SolverConfig,
    Trajectory,
    exact_dDdt,
    read_trajectory_csv,
    rhs,
    run,
    step,
    write_trajectory_csv,
)

TWO_PI = 2.0 * np.pi


# ----------------------------------------------------------------------
# oracle: dense convolution for the mollified advection term
# ----------------------------------------------------------------------

def convolution_advection(v, m):
    """(J_m v . grad) v by direct coefficient convolution, then projection.

    Independent of the FFT pipeline: O(n^{2 dim}) double loop over mode
    pairs, usable only at tiny resolutions.
    """
    g = v.grid
    n = g.n
    k = wavevectors(g)
    kinf = np.max(np.abs(k), axis=0)
    a = v.coeffs * (kinf <= m)
    modes = list(itertools.product(range(n), repeat=g.dim))

    def wavevec(idx):
        return np.array([k[(d,) + idx] for d in range(g.dim)])

    w = np.zeros_like(v.coeffs)
    for p in modes:
        ap = a[(slice(None),) + p]
        if not np.any(ap):
            continue
        for q in modes:
            vq = v.coeffs[(slice(None),) + q]
            if not np.any(vq):
                continue
            kq = wavevec(q)
            target = tuple((pi + qi) % n for pi, qi in zip(p, q))
            # alias-free only if the true sum stays in range; tiny supports ensure it
            w[(slice(None),) + target] += ap.dot(1j * kq) * vq
    # divergence-free projection
    proj = np.array(w)
    ks = np.sum(k * k, axis=0)
    div = np.sum(k * w, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(ks > 0, div / np.where(ks > 0, ks, 1.0), 0.0)
    proj = proj - k * scale
    proj[(slice(None),) + (0,) * g.dim] = 0.0
    return proj


def test_rhs_matches_convolution_oracle():
    g = make_grid(2, 16)
    v = random_divfree(g, spectrum_slope=-2.0, seed=5, amplitude=1.0, k_cut=2)
    m = 2
    oracle = -convolution_advection(v, m)
    k = wavevectors(g)
    ks = np.sum(k * k, axis=0)
    expected = -ks * v.coeffs + oracle
    got = rhs(v, m=m).coeffs
    np.testing.assert_allclose(got, expected, atol=1e-13)


def test_taylor_green_advection_projects_to_zero():
    # oracle: the quadratic term of the vortex is a pure gradient
    g = make_grid(2, 32)
    tg = taylor_green(g)
    adv = convolution_advection(tg, m=4)
    assert float(np.abs(adv).max()) < 1e-12
    r = rhs(tg, m=4)
    np.testing.assert_allclose(r.coeffs, -2.0 * tg.coeffs, atol=1e-12)


def test_rhs_zero_field():
    g = make_grid(2, 16)
    z = field_from_coeffs(g, np.zeros((2, 16, 16), dtype=complex))
    assert float(np.abs(rhs(z, m=4).coeffs).max()) == 0.0


def test_rhs_single_mode_is_stokes():
    g = make_grid(2, 32)
    v = single_mode(g, (1, 2))
    r = rhs(v, m=8, advection=False)
    np.testing.assert_allclose(r.coeffs, -5.0 * v.coeffs, atol=1e-14)


def test_advection_orthogonal_to_velocity():
    # dealiased skew symmetry: the advection term carries no energy flux
    g = make_grid(2, 32)
    v = random_divfree(g, spectrum_slope=-2.0, seed=3, amplitude=2.0, k_cut=8)
    k = wavevectors(g)
    ks = np.sum(k * k, axis=0)
    nonlinear = rhs(v, m=8).coeffs + ks * v.coeffs
    flux = float(np.sum((v.coeffs.conj() * nonlinear).real))
    assert abs(flux) < 1e-13 * l2_norm_sq(v)


# ----------------------------------------------------------------------
# stepping
# ----------------------------------------------------------------------

@pytest.mark.parametrize("integrator", ["imex-rk2", "rk4"])
def test_single_stokes_step_exact(integrator):
    g = make_grid(2, 32)
    v = single_mode(g, (1, 2))
    cfg = SolverConfig(grid=g, m=8, dt=0.01, T=1.0, integrator=integrator, advection=False)
    out = step(v, cfg)
    np.testing.assert_allclose(out.coeffs, v.coeffs * np.exp(-5.0 * 0.01), rtol=1e-13)


def test_step_zero_field():
    g = make_grid(2, 16)
    z = field_from_coeffs(g, np.zeros((2, 16, 16), dtype=complex))
    cfg = SolverConfig(grid=g, m=4, dt=0.01, T=1.0)
    out = step(z, cfg)
    assert float(np.abs(out.coeffs).max()) == 0.0


def test_taylor_green_integrated_exactly():
    # the vortex reduces to Stokes flow, which the integrating factor nails
    g = make_grid(2, 32)
    cfg = SolverConfig(grid=g, m=8, dt=1e-3, T=0.25)
    traj = run(cfg, taylor_green(g))
    expected = 2 * np.pi**2 * np.exp(-4.0 * traj.times)
    np.testing.assert_allclose(traj.E, expected, rtol=1e-12)


def test_self_convergence_orders():
    # nonlinear flow: order from Richardson self-comparison at T
    g = make_grid(2, 32)
    v0 = random_divfree(g, spectrum_slope=-2.0, seed=2, amplitude=3.0, k_cut=6)
    T = 0.1

    def final_state(integrator, dt):
        cfg = SolverConfig(grid=g, m=8, dt=dt, T=T, integrator=integrator)
        tr = run(cfg, v0)
        return tr.E[-1]

    for integrator, min_order in (("imex-rk2", 2.0), ("rk4", 4.0)):
        ref = final_state(integrator, T / 1024)
        errs = [abs(final_state(integrator, dt) - ref) for dt in (T / 16, T / 32, T / 64)]
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) > min_order - 0.4, (integrator, orders)


def test_cfl_violation_reports_suggestion():
    g = make_grid(2, 32)
    v0 = taylor_green(g, amplitude=500.0)
    cfg = SolverConfig(grid=g, m=8, dt=0.01, T=0.1)
    with pytest.raises(CflError) as exc:
        run(cfg, v0)
    assert exc.value.suggested_dt < 0.01
    assert "suggested dt" in str(exc.value)


# ----------------------------------------------------------------------
# run-level diagnostics
# ----------------------------------------------------------------------

def test_stokes_mode_energy_decay():
    g = make_grid(2, 16)
    v0 = single_mode(g, (1, 2), amplitude=1.0)
    cfg = SolverConfig(grid=g, m=4, dt=1e-3, T=1.0)
    traj = run(cfg, v0)
    expected = np.exp(-2.0 * 5.0 * traj.times)
    np.testing.assert_allclose(traj.E, expected, rtol=1e-6)


def test_nonlinearity_disabled_mode_decay():
    g = make_grid(2, 16)
    v0 = single_mode(g, (2, 2), amplitude=2.0)
    cfg = SolverConfig(grid=g, m=4, dt=1e-3, T=0.5, advection=False)
    traj = run(cfg, v0)
    expected = 4.0 * np.exp(-2.0 * 8.0 * traj.times)
    np.testing.assert_allclose(traj.E, expected, rtol=1e-9)


def test_zero_initial_data_gives_zero_trajectory():
    g = make_grid(2, 16)
    z = field_from_coeffs(g, np.zeros((2, 16, 16), dtype=complex))
    cfg = SolverConfig(grid=g, m=4, dt=1e-2, T=0.1)
    traj = run(cfg, z)
    assert np.all(traj.E == 0.0) and np.all(traj.D == 0.0) and np.all(traj.dDdt == 0.0)


def test_energy_monotone_and_positive(rand32_traj):
    assert np.all(np.diff(rand32_traj.E) <= 1e-11 * rand32_traj.E[0])
    assert np.all(rand32_traj.E > 0)
    # nondegeneracy: the gradient norm never vanishes on the horizon
    assert np.all(rand32_traj.D > 0)


def test_divergence_free_every_step():
    g = make_grid(2, 16)
    v = random_divfree(g, spectrum_slope=-2.0, seed=4, amplitude=2.0, k_cut=4)
    cfg = SolverConfig(grid=g, m=4, dt=2e-3, T=0.02)
    k = wavevectors(g)
    for _ in range(10):
        v = step(v, cfg)
        div = float(np.abs(np.sum(k * v.coeffs, axis=0)).max())
        assert div < 1e-13


def test_exact_dDdt_matches_finite_differences():
    # the stored derivative is the dt -> 0 limit of centered differences
    g = make_grid(2, 32)
    v0 = random_divfree(g, spectrum_slope=-3.0, seed=11, amplitude=3.0, k_cut=8)

    def mismatch(dt):
        traj = run(SolverConfig(grid=g, m=8, dt=dt, T=0.1, integrator="rk4"), v0)
        centered = (traj.D[2:] - traj.D[:-2]) / (2 * dt)
        return float(np.abs(traj.dDdt[1:-1] - centered).max())

    coarse, fine = mismatch(1e-3), mismatch(5e-4)
    assert 3.0 < coarse / fine < 5.0  # truncation is O(dt^2)
    assert fine < coarse


def test_exact_dDdt_closed_forms():
    g = make_grid(2, 32)
    # Stokes mode k: dD/dt = -2 |k|^2 D
    v = single_mode(g, (1, 2))
    D = 5.0 * l2_norm_sq(v)
    assert exact_dDdt(v, m=8, advection=False) == pytest.approx(-2 * 5.0 * D, rel=1e-12)
    # vortex: dD/dt = -4 D
    tg = taylor_green(g)
    assert exact_dDdt(tg, m=8) == pytest.approx(-4.0 * 4 * np.pi**2, rel=1e-10)
    # zero field
    z = field_from_coeffs(g, np.zeros((2, 32, 32), dtype=complex))
    assert exact_dDdt(z, m=8) == 0.0


def test_discrete_energy_law_below_tolerance(rand32_traj, tg32_traj):
    from torusgap.ledger import worst_residual
    from torusgap.solver import quadrature_tolerance

    for traj in (rand32_traj, tg32_traj):
        assert worst_residual(traj) <= quadrature_tolerance(traj)


def test_m_refinement_trend():
    # dissipation series converge as the smoothing index grows
    g = make_grid(2, 64)
    v0 = random_divfree(g, spectrum_slope=-2.0, seed=12, amplitude=4.0, k_cut=12)
    trajs = {m: run(SolverConfig(grid=g, m=m, dt=2e-3, T=0.2), v0) for m in (4, 8, 16)}
    t = trajs[4].times
    d1 = trapezoid(np.abs(trajs[4].D - trajs[8].D), t)
    d2 = trapezoid(np.abs(trajs[8].D - trajs[16].D), t)
    assert d2 < d1


def test_3d_run_energy_law_and_divergence():
    g = make_grid(3, 16)
    v0 = taylor_green(g, amplitude=2.0)
    cfg = SolverConfig(grid=g, m=4, dt=2e-3, T=0.2)
    traj = run(cfg, v0)
    from torusgap.ledger import worst_residual
    from torusgap.solver import quadrature_tolerance

    assert worst_residual(traj) <= quadrature_tolerance(traj)
    assert np.all(np.diff(traj.E) < 0)
    final = step(single_mode(g, (1, 1, 0)), cfg)
    assert final.max_divergence() < 1e-13


def test_3d_stokes_mode_decay():
    g = make_grid(3, 16)
    v0 = single_mode(g, (1, 2, 1), amplitude=1.0)  # |k|^2 = 6
    cfg = SolverConfig(grid=g, m=4, dt=1e-3, T=0.3)
    traj = run(cfg, v0)
    np.testing.assert_allclose(traj.E, np.exp(-12.0 * traj.times), rtol=1e-9)


def test_sample_stride():
    g = make_grid(2, 16)
    cfg = SolverConfig(grid=g, m=4, dt=1e-2, T=0.2, sample_every=5)
    traj = run(cfg, taylor_green(g))
    assert len(traj.times) == 5
    np.testing.assert_allclose(np.diff(traj.times), 0.05, rtol=1e-12)


def test_snapshots_stored_on_request():
    g = make_grid(2, 16)
    cfg = SolverConfig(grid=g, m=4, dt=1e-2, T=0.1, snapshot_every=5)
    traj = run(cfg, taylor_green(g))
    assert 0.0 in traj.snapshots
    for field in traj.snapshots.values():
        assert field.max_divergence() < 1e-12


# ----------------------------------------------------------------------
# config validation and serialization
# ----------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    {"dt": 0.0}, {"dt": -1.0}, {"T": 0.0}, {"m": 0}, {"m": 20},
    {"sample_every": 0}, {"integrator": "euler"},
])
def test_solver_config_invariants(kwargs):
    g = make_grid(2, 32)
    base = dict(grid=g, m=8, dt=1e-3, T=1.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        SolverConfig(**base)


def test_trajectory_time_monotonicity_enforced():
    with pytest.raises(ValueError):
        Trajectory(config=None, times=[0.0, 0.0, 0.1], E=[1, 1, 1], D=[1, 1, 1])


def test_index_of_off_grid_raises(tg32_traj):
    with pytest.raises(SampleGridError):
        tg32_traj.index_of(0.2505)


def test_csv_roundtrip(tmp_path, tg32_traj):
    path = tmp_path / "traj.csv"
    write_trajectory_csv(tg32_traj, path)
    back = read_trajectory_csv(path)
    np.testing.assert_array_equal(back.times, tg32_traj.times)
    np.testing.assert_array_equal(back.E, tg32_traj.E)
    np.testing.assert_array_equal(back.D, tg32_traj.D)
    np.testing.assert_array_equal(back.dDdt, tg32_traj.dDdt)
    header = path.read_text().splitlines()[0]
    assert header == "time,energy,grad_norm_sq,dgrad_dt"


def test_csv_rejects_wrong_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,value\n0.0,1.0\n")
    with pytest.raises(ValueError):
        read_trajectory_csv(path)
