"""Energy-balance diagnostics on sampled trajectories.

All identities are evaluated with the shared quadrature (corrected
trapezoid, since trajectories carry the exact dD/dt series) and only at
sample instants: the residual of the two-point energy law, the dissipation
ratio that should equal one for the finite approximations, and the strong
form of the energy inequality.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTrajectoryError
from .quadrature import cumulative_trapezoid, trapezoid
from .solver import Trajectory, quadrature_tolerance

__all__ = [
    "LedgerReport",
    "energy_residual",
    "p_ratio",
    "strong_inequality_check",
    "ledger_report",
    "write_ledger_csv",
]

LEDGER_CSV_HEADER = ("s", "t", "residual", "p_ratio", "inequality_ok")


@dataclass(frozen=True)
class LedgerReport:
    s: float
    t: float
    residual: float
    p_ratio: float
    inequality_ok: bool


def _slice(traj: Trajectory, s: float, t: float):
    i = traj.index_of(s)
    j = traj.index_of(t)
    if i > j:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    return i, j


def _dissipation_integral(traj: Trajectory, i: int, j: int) -> float:
    dD = None if traj.dDdt is None else traj.dDdt[i:j + 1]
    return trapezoid(traj.D[i:j + 1], traj.times[i:j + 1], dD)


def energy_residual(traj: Trajectory, s: float, t: float) -> float:
    """Signed defect E(t) + 2*int_s^t D - E(s); zero for exact balance."""
    i, j = _slice(traj, s, t)
    return float(traj.E[j] - traj.E[i] + 2.0 * _dissipation_integral(traj, i, j))


def residual_profile(traj: Trajectory) -> np.ndarray:
    """phi(tau) = E(tau) + 2*int_0^tau D; residual(s,t) = phi(t) - phi(s)."""
    dD = traj.dDdt
    C = cumulative_trapezoid(traj.D, traj.times, dD)
    return traj.E + 2.0 * C


def worst_residual(traj: Trajectory) -> float:
    """max over all sample pairs s < t of |E(t) - E(s) + 2*int_s^t D|."""
    phi = residual_profile(traj)
    return float(phi.max() - phi.min())


def p_ratio(traj: Trajectory, s: float, t: float) -> float:
    """2*int_s^t D divided by the energy drop E(s) - E(t).

    Equals one, up to integrator and quadrature error, for every
    solver-produced trajectory; requires a strictly positive drop.
    """
    i, j = _slice(traj, s, t)
    drop = traj.E[i] - traj.E[j]
    if drop <= 0.0:
        raise DegenerateTrajectoryError(
            f"no energy drop between s={s} and t={t} (E(s)={traj.E[i]:g}, E(t)={traj.E[j]:g})"
        )
    return float(2.0 * _dissipation_integral(traj, i, j) / drop)


def strong_inequality_check(traj: Trajectory, s_list, t: float, tol: float | None = None):
    """Flags E(t) + int_s^t D <= E(s) + tol for each s (single-weight form)."""
    if tol is None:
        tol = quadrature_tolerance(traj)
    out = []
    j = traj.index_of(t)
    for s in np.atleast_1d(s_list):
        i = traj.index_of(float(s))
        if i > j:
            raise ValueError(f"each s must be <= t, got s={s}, t={t}")
        lhs = traj.E[j] + _dissipation_integral(traj, i, j)
        out.append(bool(lhs <= traj.E[i] + tol))
    return out


def ledger_report(traj: Trajectory, s: float, t: float, tol: float | None = None) -> LedgerReport:
    if tol is None:
        tol = quadrature_tolerance(traj)
    res = energy_residual(traj, s, t)
    try:
        ratio = p_ratio(traj, s, t)
    except DegenerateTrajectoryError:
        ratio = float("nan")
    ok = strong_inequality_check(traj, [s], t, tol=tol)[0]
    return LedgerReport(s=float(s), t=float(t), residual=res, p_ratio=ratio, inequality_ok=ok)


def write_ledger_csv(reports, path, append: bool = False) -> None:
    mode = "a" if append else "w"
    with open(path, mode, encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        if not append:
            writer.writerow(LEDGER_CSV_HEADER)
        for r in reports:
            writer.writerow([repr(r.s), repr(r.t), repr(r.residual), repr(r.p_ratio), r.inequality_ok])
