import numpy as np
import pytest

from torusgap.errors import DegenerateTrajectoryError, PreconditionError
from torusgap.gaps import (
    CutoffFunction,
    exponential_weight,
    extrapolate,
    g_gap_by_parts,
    g_gap_direct,
    gap_ladder,
    h_gap,
    meanvalue_ladder,
    p_meanvalue,
    reciprocal_weight,
    table_weight,
)
from torusgap.ledger import energy_residual
from torusgap.solver import Trajectory, quadrature_tolerance


def synthetic_constant_D(D0=3.0, E0=10.0, T=1.0, n=201):
    """Constant dissipation with exactly consistent linear energy decay."""
    times = np.linspace(0.0, T, n)
    D = np.full(n, D0)
    E = E0 - 2.0 * D0 * times
    return Trajectory(config=None, times=times, E=E, D=D, dDdt=np.zeros(n))


def weight_library(traj):
    return [
        reciprocal_weight(1.0),
        reciprocal_weight(10.0),
        exponential_weight(max(float(traj.D[0]), 1.0)),
    ]


# ----------------------------------------------------------------------
# direct and by-parts forms
# ----------------------------------------------------------------------

def test_constant_dissipation_gives_zero_gap():
    traj = synthetic_constant_D()
    w = reciprocal_weight(1.0)
    for beta in (1.0, 0.5, 0.1):
        assert g_gap_direct(traj, 0.0, 1.0, w, beta) == 0.0
        assert g_gap_by_parts(traj, 0.0, 1.0, w, beta) == pytest.approx(0.0, abs=1e-12)


def test_by_parts_identity_full_matrix(tg32_traj, rand32_traj):
    # the discrete defect is the plain-rule error of the direct integrand,
    # so windows on rough data start past the fastest dissipative transient
    # (the functionals' native regime is s > 0 in any case)
    for traj, s in ((tg32_traj, 0.0), (rand32_traj, 0.05)):
        t_end = float(traj.times[-1])
        tol = 10.0 * quadrature_tolerance(traj)
        for w in weight_library(traj):
            for beta in (1.0, 0.5, 0.1):
                direct = g_gap_direct(traj, s, t_end, w, beta)
                byparts = g_gap_by_parts(traj, s, t_end, w, beta)
                assert abs(direct - byparts) <= tol, (w.kind, beta)


def test_by_parts_beta_zero_is_negated_residual(tg32_traj):
    w = reciprocal_weight(1.0)
    res = energy_residual(tg32_traj, 0.1, 0.5)
    assert g_gap_by_parts(tg32_traj, 0.1, 0.5, w, 0.0) == -res


def test_direct_requires_positive_beta(tg32_traj):
    with pytest.raises(ValueError):
        g_gap_direct(tg32_traj, 0.0, 0.5, reciprocal_weight(1.0), 0.0)


def test_h_gap_reduces_to_reciprocal_direct(tg32_traj, rand32_traj):
    for traj in (tg32_traj, rand32_traj):
        t_end = float(traj.times[-1])
        for K in (1.0, 5.0):
            for gamma in (0.5, 0.1, 0.025):
                a = h_gap(traj, 0.0, t_end, K, gamma)
                b = g_gap_direct(traj, 0.0, t_end, reciprocal_weight(K), gamma)
                assert a == pytest.approx(b, rel=1e-12)


def test_h_gap_constant_dissipation_zero():
    traj = synthetic_constant_D()
    assert h_gap(traj, 0.0, 1.0, 1.0, 0.3) == 0.0


def test_table_weight_matches_reciprocal_shape(tg32_traj):
    # tabulated reciprocal weight approximates the analytic one
    nodes = np.linspace(0.0, 2.0 * float(tg32_traj.D[0]), 4001)
    w_tab = table_weight(nodes, 1.0 / (1.0 + nodes))
    w_ana = reciprocal_weight(1.0)
    a = g_gap_direct(tg32_traj, 0.0, 0.5, w_tab, 0.5)
    b = g_gap_direct(tg32_traj, 0.0, 0.5, w_ana, 0.5)
    assert a == pytest.approx(b, rel=1e-4)


# ----------------------------------------------------------------------
# extrapolation
# ----------------------------------------------------------------------

def test_extrapolate_exact_linear_ladder():
    res = extrapolate({0.1: 1.1, 0.05: 1.05, 0.025: 1.025}, model="linear")
    assert res.limit == pytest.approx(1.0, abs=1e-12)
    assert res.error < 1e-10


def test_extrapolate_constant_ladder():
    for model in ("linear", "richardson", "aitken"):
        res = extrapolate({0.1: 5.0, 0.05: 5.0, 0.025: 5.0}, model=model)
        assert res.limit == 5.0
        assert res.error == 0.0


def test_extrapolate_richardson_quadratic():
    values = {p: 2.0 + 3.0 * p - 5.0 * p * p for p in (0.2, 0.1, 0.05, 0.025)}
    res = extrapolate(values, model="richardson")
    assert res.limit == pytest.approx(2.0, abs=1e-12)


def test_extrapolate_aitken_geometric():
    values = {1.0 / 2**j: 4.0 + 3.0 * 0.7**j for j in range(5)}
    res = extrapolate(values, model="aitken")
    assert res.limit == pytest.approx(4.0, abs=1e-9)


def test_extrapolate_flags_non_monotone():
    res = extrapolate({0.2: 1.0, 0.1: 3.0, 0.05: 2.0}, model="linear")
    assert "non-monotone ladder" in res.warnings


def test_extrapolate_needs_three_points():
    with pytest.raises(ValueError):
        extrapolate({0.1: 1.0, 0.05: 2.0})


# ----------------------------------------------------------------------
# mean-value construction
# ----------------------------------------------------------------------

def test_meanvalue_big_band_equals_plain_ratio(tg32_traj):
    from torusgap.ledger import p_ratio

    t_end = float(tg32_traj.times[-1])
    R = 1.2 * float(tg32_traj.D.max())
    for alpha in (0.5, 1.0, 2.0, 8.0):
        mv = p_meanvalue(tg32_traj, t_end, CutoffFunction(R=R, alpha=alpha))
        assert mv.band_flag == "below_R"
        assert mv.h_recovered is None
        assert mv.ratio == pytest.approx(p_ratio(tg32_traj, 0.0, t_end), abs=1e-12)
        assert mv.ratio == pytest.approx(1.0, abs=1e-6)


def test_meanvalue_alpha_independent_at_large_band(rand32_traj):
    t_end = float(rand32_traj.times[-1])
    R = 2.0 * float(rand32_traj.D.max())
    ratios = [p_meanvalue(rand32_traj, t_end, CutoffFunction(R=R, alpha=a)).ratio
              for a in (0.5, 1.0, 2.0, 8.0)]
    assert max(ratios) - min(ratios) < 1e-12


def test_meanvalue_band_recovery(tg32_traj):
    t_end = float(tg32_traj.times[-1])
    cut = CutoffFunction(R=0.5 * float(tg32_traj.D.max()), alpha=1.5)
    mv = p_meanvalue(tg32_traj, t_end, cut)
    assert mv.band_flag is None
    assert 0.0 < mv.ratio < 1.0
    assert cut.R < mv.h_recovered < 2.0 * cut.R
    # the recovered argument reproduces the ratio through the cutoff
    assert float(cut.p_of_arg(mv.h_recovered)) ** cut.alpha == pytest.approx(mv.ratio, abs=1e-9)


def test_meanvalue_ratio_monotone_in_band_level(rand32_traj):
    t_end = float(rand32_traj.times[-1])
    Dmax = float(rand32_traj.D.max())
    ratios = []
    for R in np.linspace(0.35 * Dmax, 1.4 * Dmax, 8):
        try:
            ratios.append(p_meanvalue(rand32_traj, t_end, CutoffFunction(R=R)).ratio)
        except PreconditionError:
            continue
    assert len(ratios) >= 4
    assert all(b >= a - 1e-12 for a, b in zip(ratios, ratios[1:]))
    assert all(0.0 < r <= 1.0 + 1e-9 for r in ratios)


def test_meanvalue_precondition_below_threshold(tg32_traj):
    t_end = float(tg32_traj.times[-1])
    with pytest.raises(PreconditionError, match="R0"):
        p_meanvalue(tg32_traj, t_end, CutoffFunction(R=1e-6))


def test_meanvalue_degenerate_zero_drop():
    times = np.linspace(0.0, 1.0, 11)
    traj = Trajectory(config=None, times=times, E=np.ones(11), D=np.full(11, 0.01),
                      dDdt=np.zeros(11))
    with pytest.raises(DegenerateTrajectoryError):
        p_meanvalue(traj, 1.0, CutoffFunction(R=1.0))


def test_smooth_cutoff_shape_invertible():
    cut = CutoffFunction(R=2.0, alpha=2.0, shape="smooth")
    assert float(cut.p(1.0)) == 1.0
    assert float(cut.p(4.5)) == 0.0
    target = 0.3
    q = cut.invert_band(target)
    assert 2.0 < q < 4.0
    assert float(cut.p_of_arg(q)) ** 2.0 == pytest.approx(target, abs=1e-9)


def test_norm_argument_variant_shifts_band(tg32_traj):
    t_end = float(tg32_traj.times[-1])
    # with a huge shift the argument K1 + sqrt(D) clears the band everywhere
    cut = CutoffFunction(R=50.0, alpha=1.0, argument="norm", shift=3.0 * 50.0)
    mv = p_meanvalue(tg32_traj, t_end, cut)
    assert mv.ratio == 0.0
    assert mv.band_flag == "above_2R"
    # with zero shift and a large band the variant is inactive like the default
    cut0 = CutoffFunction(R=2.0 * float(np.sqrt(tg32_traj.D.max())), alpha=1.0,
                          argument="norm")
    mv0 = p_meanvalue(tg32_traj, t_end, cut0)
    assert mv0.ratio == pytest.approx(1.0, abs=1e-6)


# ----------------------------------------------------------------------
# ladders over m-families
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_family(grid32):
    from torusgap.fields import random_divfree
    from torusgap.solver import SolverConfig, run

    v0 = random_divfree(grid32, spectrum_slope=-3.0, seed=21, amplitude=3.0, k_cut=8)
    return {m: run(SolverConfig(grid=grid32, m=m, dt=1e-3, T=0.3, integrator="rk4"), v0)
            for m in (8, 12, 16)}


def test_gap_ladder_limits_consistent_with_zero(small_family):
    E0 = float(small_family[8].E[0])
    for functional in ("G", "H"):
        rep = gap_ladder(small_family, 0.0, 0.3, functional=functional,
                         param_ladder=(0.08, 0.04, 0.02, 0.01))
        assert abs(rep.limit) <= rep.error
        assert rep.error <= 1e-3 * E0
        assert len(rep.ladder) == 12  # 4 exponents x 3 smoothing indices


def test_gap_ladder_vortex_limits_vanish(grid32):
    # smooth decaying vortex: the extrapolated weighted defects sit at zero
    # well inside one part in 1e5 of the initial energy
    from torusgap.fields import taylor_green
    from torusgap.solver import SolverConfig, run

    v0 = taylor_green(grid32)
    fam = {m: run(SolverConfig(grid=grid32, m=m, dt=1e-3, T=0.5), v0) for m in (4, 8, 16)}
    E0 = float(fam[8].E[0])
    for functional in ("G", "H"):
        rep = gap_ladder(fam, 0.0, 0.5, functional=functional,
                         param_ladder=(0.08, 0.04, 0.02, 0.01))
        assert abs(rep.limit) <= 1e-5 * E0
        assert abs(rep.limit) <= rep.error


def test_meanvalue_ladder_reports_unit_limit(small_family):
    rep = meanvalue_ladder(small_family, 0.3)
    assert rep.limit <= 1.0
    assert rep.limit + rep.error >= 1.0 - 1e-9
    assert rep.meanvalue  # per-point mean-value rows present


def test_gap_report_serializable(small_family):
    import json

    rep = gap_ladder(small_family, 0.0, 0.3, functional="G")
    payload = json.dumps(rep.to_dict())
    assert "ladder" in payload and "limit" in payload
