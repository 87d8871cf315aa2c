"""Weighted gap functionals, the cutoff mean-value construction, and
parameter-ladder extrapolation.

Three families of diagnostics quantify how far a trajectory family is from
exact energy balance:

* the weighted defect in direct form, ``-beta * int E g^(beta-1)(D) g'(D)
  dD/dtau dtau`` for a positive decaying weight g, and its by-parts twin
  ``E(s) g^beta(D(s)) - E(t) g^beta(D(t)) - 2 int g^beta(D) D dtau``; the
  two agree to quadrature accuracy for every trajectory, and at beta = 0
  the by-parts form reduces exactly to the energy residual with its sign
  flipped;
* the reciprocal-weight variant with constant K (identical to the direct
  form with g = 1/(K + rho), exponent gamma);
* the mean-value ratio ``2 int_0^t p_R^alpha(D) D dtau / (E(0) - E(t))``
  for a plateau cutoff p_R, together with recovery of the band value at
  which the cutoff attains that ratio.

Iterated limits are estimated by extrapolating geometric ladders: inner
limit in the smoothing index first (against 1/m), then the outer weight or
band parameter, either by a straight-line fit or by polynomial (Richardson
style) extrapolation with a residual-based error bar.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTrajectoryError, PreconditionError
from .quadrature import trapezoid
from .solver import Trajectory

__all__ = [
    "WeightFunction",
    "reciprocal_weight",
    "exponential_weight",
    "table_weight",
    "CutoffFunction",
    "MeanValueResult",
    "GapReport",
    "ExtrapolationResult",
    "g_gap_direct",
    "g_gap_by_parts",
    "h_gap",
    "p_meanvalue",
    "extrapolate",
    "gap_ladder",
    "meanvalue_ladder",
]

# ladder defaults shared with the CLI layer
DEFAULT_BETA_LADDER = (0.2, 0.1, 0.05, 0.025)
DEFAULT_ALPHA_LADDER = (0.5, 1.0, 2.0, 8.0)
DEFAULT_R_FACTORS = (2.0, 4.0, 8.0, 16.0)


# ----------------------------------------------------------------------
# weights and cutoffs
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class WeightFunction:
    """Positive Lipschitz weight g with g(rho) -> 0 at infinity."""

    kind: str
    K: float
    g: object
    gprime: object

    def __call__(self, rho):
        return self.g(rho)


def reciprocal_weight(K: float = 1.0) -> WeightFunction:
    if K <= 0:
        raise ValueError("K must be positive")
    return WeightFunction(
        kind="reciprocal", K=K,
        g=lambda rho: 1.0 / (K + rho),
        gprime=lambda rho: -1.0 / (K + rho) ** 2,
    )


def exponential_weight(K: float = 1.0) -> WeightFunction:
    if K <= 0:
        raise ValueError("K must be positive")
    return WeightFunction(
        kind="exponential", K=K,
        g=lambda rho: np.exp(-rho / K),
        gprime=lambda rho: -np.exp(-rho / K) / K,
    )


def table_weight(rho_nodes, values) -> WeightFunction:
    """Piecewise-linear user weight; slopes act as the a.e. derivative."""
    rho_nodes = np.asarray(rho_nodes, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if np.any(values <= 0):
        raise ValueError("table weight must be strictly positive")
    if np.any(np.diff(rho_nodes) <= 0):
        raise ValueError("table nodes must be strictly increasing")
    slopes = np.diff(values) / np.diff(rho_nodes)

    def g(rho):
        return np.interp(rho, rho_nodes, values)

    def gprime(rho):
        idx = np.clip(np.searchsorted(rho_nodes, rho, side="right") - 1, 0, len(slopes) - 1)
        inside = (np.asarray(rho) >= rho_nodes[0]) & (np.asarray(rho) <= rho_nodes[-1])
        return np.where(inside, slopes[idx], 0.0)

    return WeightFunction(kind="table", K=float(rho_nodes[-1]), g=g, gprime=gprime)


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class CutoffFunction:
    """Plateau cutoff: 1 up to R, 0 from 2R, strictly decreasing between.

    ``shape`` is 'linear' ((2R - rho)/R on the band) or 'smooth' (cubic
    smoothstep).  ``alpha`` is the exponent applied on top.  ``shift`` and
    ``argument`` select the variant where the cutoff is evaluated at
    shift + sqrt(rho) instead of rho itself; both variants are exposed and
    neither is canonical.
    """

    R: float
    alpha: float = 1.0
    shape: str = "linear"
    shift: float = 0.0
    argument: str = "grad_sq"  # or "norm": cutoff argument shift + sqrt(rho)

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.shape not in ("linear", "smooth"):
            raise ValueError(f"unknown cutoff shape {self.shape!r}")
        if self.argument not in ("grad_sq", "norm"):
            raise ValueError(f"unknown cutoff argument {self.argument!r}")
        if self.shift < 0:
            raise ValueError("shift must be nonnegative")

    def arg(self, rho):
        rho = np.asarray(rho, dtype=np.float64)
        if self.argument == "grad_sq":
            return self.shift + rho
        return self.shift + np.sqrt(np.maximum(rho, 0.0))

    def p_of_arg(self, q):
        q = np.asarray(q, dtype=np.float64)
        if self.shape == "linear":
            return np.clip((2.0 * self.R - q) / self.R, 0.0, 1.0)
        return 1.0 - _smoothstep((q - self.R) / self.R)

    def p(self, rho):
        return self.p_of_arg(self.arg(rho))

    def p_alpha(self, rho):
        return self.p(rho) ** self.alpha

    def invert_band(self, target: float, tol_factor: float = 1e-10) -> float:
        """Band argument q in (R, 2R) with p(q)^alpha == target, by bisection."""
        if not 0.0 < target < 1.0:
            raise ValueError("target must lie strictly between 0 and 1")
        lo, hi = self.R, 2.0 * self.R  # p^alpha decreasing: value 1 at lo, 0 at hi
        tol = tol_factor * self.R
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if float(self.p_of_arg(mid)) ** self.alpha > target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


# ----------------------------------------------------------------------
# gap functionals on a single trajectory
# ----------------------------------------------------------------------

def _window(traj: Trajectory, s: float, t: float):
    i = traj.index_of(s)
    j = traj.index_of(t)
    if i >= j:
        raise ValueError(f"need s < t on the sample grid, got s={s}, t={t}")
    if traj.dDdt is None:
        raise ValueError("trajectory must carry the exact dD/dt series")
    sl = slice(i, j + 1)
    return traj.times[sl], traj.E[sl], traj.D[sl], traj.dDdt[sl]


def g_gap_direct(traj: Trajectory, s: float, t: float, w: WeightFunction, beta: float) -> float:
    """Direct-form weighted defect, plain trapezoid on the sampled integrand."""
    if beta <= 0:
        raise ValueError("beta must be positive in the direct form")
    tau, E, D, dD = _window(traj, s, t)
    integrand = E * np.asarray(w.g(D)) ** (beta - 1.0) * np.asarray(w.gprime(D)) * dD
    return float(-beta * trapezoid(integrand, tau))


def g_gap_by_parts(traj: Trajectory, s: float, t: float, w: WeightFunction, beta: float) -> float:
    """By-parts form of the weighted defect.

    At beta = 0 this is exactly the negated energy residual; the weighted
    dissipation integral uses the corrected trapezoid (its exact derivative
    is available from the stored dD/dt).
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    tau, E, D, dD = _window(traj, s, t)
    gD = np.asarray(w.g(D), dtype=np.float64)
    gb = gD ** beta
    integrand = gb * D
    d_integrand = (beta * gD ** (beta - 1.0) * np.asarray(w.gprime(D)) * D + gb) * dD if beta > 0 else dD
    boundary = E[0] * gb[0] - E[-1] * gb[-1]
    return float(boundary - 2.0 * trapezoid(integrand, tau, d_integrand))


def h_gap(traj: Trajectory, s: float, t: float, K: float, gamma: float) -> float:
    """Reciprocal-weight defect: gamma * int E (K+D)^(-gamma-1) dD/dtau dtau."""
    if gamma <= 0 or K <= 0:
        raise ValueError("gamma and K must be positive")
    tau, E, D, dD = _window(traj, s, t)
    integrand = E * (K + D) ** (-gamma - 1.0) * dD
    return float(gamma * trapezoid(integrand, tau))


# ----------------------------------------------------------------------
# mean-value construction
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MeanValueResult:
    ratio: float
    h_recovered: float | None
    band_flag: str | None
    R0: float
    R: float
    alpha: float


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(7)


def _band_levels_in_D(cutoff: CutoffFunction):
    """Levels of D at which the cutoff argument crosses R and 2R.

    The argument map is increasing in D, so a level is never crossed when
    the shift already exceeds it (returned as -inf: the region below is
    empty).
    """
    levels = []
    for lvl in (cutoff.R, 2.0 * cutoff.R):
        if cutoff.shift >= lvl:
            levels.append(-np.inf)
        elif cutoff.argument == "grad_sq":
            levels.append(lvl - cutoff.shift)
        else:
            levels.append((lvl - cutoff.shift) ** 2)
    return levels  # (D where arg = R, D where arg = 2R)


def _cutoff_weighted_integral(tau, D, cutoff: CutoffFunction) -> float:
    """int p^alpha(D) * D dtau on the linear interpolant of D.

    Panels are split where the cutoff argument crosses R or 2R; plateau
    segments integrate exactly, band segments by 7-point Gauss-Legendre.
    """
    lo, hi = _band_levels_in_D(cutoff)
    total = 0.0
    theta = 0.5 * (_GL_NODES + 1.0)
    for i in range(len(tau) - 1):
        t0, t1 = tau[i], tau[i + 1]
        y0, y1 = D[i], D[i + 1]
        cuts = [0.0, 1.0]
        for lvl in (lo, hi):
            if np.isfinite(lvl) and (y0 - lvl) * (y1 - lvl) < 0.0:
                cuts.append((lvl - y0) / (y1 - y0))
        cuts.sort()
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b <= a:
                continue
            ym = y0 + 0.5 * (a + b) * (y1 - y0)
            ya = y0 + a * (y1 - y0)
            yb = y0 + b * (y1 - y0)
            seg = (b - a) * (t1 - t0)
            if ym <= lo:  # plateau: integrand is D itself
                total += seg * 0.5 * (ya + yb)
            elif ym < hi:
                yy = ya + theta * (yb - ya)
                total += seg * 0.5 * float(np.sum(_GL_WEIGHTS * cutoff.p_alpha(yy) * yy))
            # beyond the upper level the cutoff vanishes
    return total


def p_meanvalue(traj: Trajectory, t: float, cutoff: CutoffFunction,
                band_tol: float = 1e-7) -> MeanValueResult:
    """Mean-value ratio over (0, t) and the recovered band argument.

    ratio = 2 int_0^t p_R^alpha(D) D dtau / (E(0) - E(t)); admissible only
    for R above R0 = (int_0^t D) / (2t) and a strictly positive drop.  When
    the ratio reaches 1 the mean-value argument sits below R and only a
    band flag is reported; otherwise the strictly monotone band branch of
    p^alpha is inverted for it.
    """
    j = traj.index_of(t)
    if j == 0:
        raise ValueError("t must be a positive sample time")
    tau = traj.times[:j + 1]
    D = traj.D[:j + 1]
    dD = None if traj.dDdt is None else traj.dDdt[:j + 1]
    A = trapezoid(D, tau, dD)
    R0 = A / (2.0 * t)
    if cutoff.R <= R0:
        raise PreconditionError(
            f"R={cutoff.R:g} is not above the admissibility threshold R0={R0:g}"
        )
    drop = traj.E[0] - traj.E[j]
    if drop <= 0.0:
        raise DegenerateTrajectoryError("no energy drop on (0, t)")

    if float(np.max(cutoff.arg(D))) <= cutoff.R:
        numerator = A  # cutoff identically one: same integral as the plain ratio
    else:
        numerator = _cutoff_weighted_integral(tau, D, cutoff)
    ratio = 2.0 * numerator / drop

    if ratio >= 1.0 - band_tol:
        return MeanValueResult(ratio=ratio, h_recovered=None, band_flag="below_R",
                               R0=R0, R=cutoff.R, alpha=cutoff.alpha)
    if ratio <= band_tol:
        # shifted-variant cutoffs can vanish on the whole range
        return MeanValueResult(ratio=ratio, h_recovered=None, band_flag="above_2R",
                               R0=R0, R=cutoff.R, alpha=cutoff.alpha)
    h = cutoff.invert_band(ratio)
    return MeanValueResult(ratio=ratio, h_recovered=h, band_flag=None,
                           R0=R0, R=cutoff.R, alpha=cutoff.alpha)


# ----------------------------------------------------------------------
# ladder extrapolation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ExtrapolationResult:
    limit: float
    error: float
    warnings: tuple = ()


def _aitken_stage(seq):
    out = []
    for i in range(len(seq) - 2):
        den = seq[i] + seq[i + 2] - 2.0 * seq[i + 1]
        scale = max(abs(seq[i]), abs(seq[i + 1]), abs(seq[i + 2]), 1e-300)
        if abs(den) <= 1e-12 * scale:
            out.append(seq[i + 2])  # already converged at this resolution
        else:
            out.append(seq[i + 2] - (seq[i + 2] - seq[i + 1]) ** 2 / den)
    return out


def _aitken_limit(values):
    """Iterated Aitken delta-squared; exact on geometric convergence.

    The error bar combines the jump from the penultimate stage with that
    stage's internal spread, so sequences the acceleration cannot resolve
    (very shallow power laws) report honestly wide bars instead of
    confident wrong limits.
    """
    stage = list(values)
    prev_stage = stage
    while len(stage) >= 3:
        prev_stage = stage
        stage = _aitken_stage(stage)
    limit = float(stage[-1])
    err = abs(limit - prev_stage[-1]) + abs(prev_stage[-1] - prev_stage[0])
    return limit, float(err)


def _neville_at_zero(x, y):
    """Polynomial extrapolation of (x, y) to x = 0, full Neville diagonal."""
    x = np.asarray(x, dtype=np.float64)
    tableau = np.asarray(y, dtype=np.float64).copy()
    diag = [tableau[-1]]
    n = len(x)
    for level in range(1, n):
        for i in range(n - level):
            tableau[i] = tableau[i + 1] + (tableau[i + 1] - tableau[i]) * x[i + level] / (
                x[i] - x[i + level]
            )
        diag.append(tableau[n - level - 1])
    return diag  # diag[k] extrapolates through the last k+1 nodes


def extrapolate(ladder, model: str = "richardson") -> ExtrapolationResult:
    """Estimate the limit of ladder values as the parameter goes to zero.

    ``ladder`` maps parameter -> value (at least three points).  The
    ``linear`` model fits a straight line and reports its intercept; the
    ``richardson`` model runs polynomial extrapolation to parameter zero;
    the ``aitken`` model applies iterated delta-squared acceleration to the
    values ordered by decreasing parameter (exact for geometric
    convergence of unknown ratio, e.g. power-law decay along a doubling
    ladder).  The error bar is residual-based and accompanies every limit.
    """
    if hasattr(ladder, "items"):
        pairs = sorted(ladder.items(), key=lambda kv: -kv[0])
    else:
        pairs = sorted(ladder, key=lambda kv: -kv[0])
    if len(pairs) < 3:
        raise ValueError("ladder needs at least three points")
    params = np.array([p for p, _ in pairs], dtype=np.float64)
    values = np.array([v for _, v in pairs], dtype=np.float64)
    if np.any(params <= 0):
        raise ValueError("ladder parameters must be positive")

    warnings = ()
    diffs = np.diff(values)
    if np.any(diffs > 0) and np.any(diffs < 0):
        warnings = ("non-monotone ladder",)

    if model == "linear":
        if np.all(values == values[0]):
            return ExtrapolationResult(limit=float(values[0]), error=0.0, warnings=warnings)
        coeffs, residuals, *_ = np.polyfit(params, values, 1, full=True)
        limit = float(coeffs[1])
        fit_vals = np.polyval(coeffs, params)
        max_resid = float(np.max(np.abs(values - fit_vals)))
        # intercept of the two finest points as a stability probe
        p2, v2 = params[-2:], values[-2:]
        slope2 = (v2[1] - v2[0]) / (p2[1] - p2[0])
        limit2 = float(v2[1] - slope2 * p2[1])
        return ExtrapolationResult(limit=limit, error=max_resid + abs(limit - limit2),
                                   warnings=warnings)
    if model == "richardson":
        diag = _neville_at_zero(params, values)
        limit = float(diag[-1])
        error = abs(diag[-1] - diag[-2]) if len(diag) > 1 else 0.0
        return ExtrapolationResult(limit=limit, error=float(error), warnings=warnings)
    if model == "aitken":
        limit, error = _aitken_limit(values)
        return ExtrapolationResult(limit=limit, error=error, warnings=warnings)
    raise ValueError(f"unknown extrapolation model {model!r}")


# ----------------------------------------------------------------------
# ladders over trajectory families
# ----------------------------------------------------------------------

@dataclass
class GapReport:
    """Ladder values, inner limits in the smoothing index, and the final limit."""

    functional: str
    parameters: dict
    ladder: list
    inner_limits: list
    limit: float
    error: float
    warnings: tuple = ()
    meanvalue: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "functional": self.functional,
            "parameters": self.parameters,
            "ladder": self.ladder,
            "inner_limits": self.inner_limits,
            "limit": self.limit,
            "error": self.error,
            "warnings": list(self.warnings),
            "meanvalue": self.meanvalue,
        }


def _inner_limit_over_m(values_by_m: dict, model: str):
    """Extrapolate m -> infinity against 1/m; passthrough below 3 points."""
    if len(values_by_m) == 1:
        (only,) = values_by_m.values()
        return float(only), 0.0, ()
    if len(values_by_m) == 2:
        ms = sorted(values_by_m)
        v = [values_by_m[m] for m in ms]
        return float(v[-1]), abs(v[-1] - v[0]), ("two-point m ladder",)
    res = extrapolate({1.0 / m: v for m, v in values_by_m.items()}, model=model)
    return res.limit, res.error, res.warnings


def gap_ladder(trajectories: dict, s: float, t: float, functional: str = "G",
               weight: WeightFunction | None = None, K: float = 1.0,
               param_ladder=DEFAULT_BETA_LADDER, model: str = "richardson") -> GapReport:
    """Iterated-limit estimate of the weighted defect over an m-family.

    ``trajectories`` maps smoothing index m to its trajectory.  The inner
    limit (m) is taken first at each weight exponent, then the exponent is
    sent to zero, matching the order of the iterated limits being modeled.
    """
    if functional not in ("G", "H"):
        raise ValueError("functional must be 'G' or 'H'")
    if functional == "G" and weight is None:
        weight = reciprocal_weight(K)
    ladder_rows = []
    inner = []
    outer = {}
    warnings = ()
    for param in sorted(param_ladder, reverse=True):
        values_by_m = {}
        for m, traj in sorted(trajectories.items()):
            if functional == "G":
                val = g_gap_direct(traj, s, t, weight, param)
            else:
                val = h_gap(traj, s, t, K, param)
            values_by_m[m] = val
            ladder_rows.append({"param": float(param), "m": int(m), "value": float(val)})
        lim, err, warn = _inner_limit_over_m(values_by_m, model)
        inner.append({"param": float(param), "limit": lim, "error": err})
        outer[param] = lim
        warnings = warnings + warn
    res = extrapolate(outer, model=model)
    total_error = res.error + max(row["error"] for row in inner)
    params = {"functional": functional, "s": s, "t": t, "model": model,
              "ladder_parameters": [float(p) for p in sorted(param_ladder, reverse=True)]}
    if functional == "H":
        params["K"] = K
    else:
        params["weight"] = weight.kind
        params["K"] = weight.K
    return GapReport(functional=functional, parameters=params, ladder=ladder_rows,
                     inner_limits=inner, limit=res.limit, error=total_error,
                     warnings=tuple(dict.fromkeys(res.warnings + warnings)))


def meanvalue_ladder(trajectories: dict, t: float, alpha: float = 1.0,
                     r_factors=DEFAULT_R_FACTORS, shape: str = "linear",
                     model: str = "linear") -> GapReport:
    """Large-band limit of the mean-value ratio over an m-family.

    The band level ladder is R = R0_max * factor with R0_max the worst
    admissibility threshold across the family; the inner limit is in m,
    the outer one in 1/R.  The ratio is non-decreasing in R and saturates
    once the band clears the dissipation range, so the outer model defaults
    to the straight-line fit and the limit is clamped into (0, 1] with the
    clamp distance added to the error bar.
    """
    r0s = {}
    for m, traj in trajectories.items():
        j = traj.index_of(t)
        dD = None if traj.dDdt is None else traj.dDdt[:j + 1]
        A = trapezoid(traj.D[:j + 1], traj.times[:j + 1], dD)
        r0s[m] = A / (2.0 * t)
    r0_max = max(r0s.values())

    ladder_rows = []
    inner = []
    outer = {}
    mv_rows = []
    warnings = ()
    for fac in sorted(r_factors, reverse=True):
        R = r0_max * fac
        values_by_m = {}
        for m, traj in sorted(trajectories.items()):
            mv = p_meanvalue(traj, t, CutoffFunction(R=R, alpha=alpha, shape=shape))
            values_by_m[m] = mv.ratio
            ladder_rows.append({"param": float(R), "m": int(m), "value": float(mv.ratio)})
            mv_rows.append({"R": float(R), "m": int(m), "ratio": float(mv.ratio),
                            "h_recovered": mv.h_recovered, "band_flag": mv.band_flag})
        lim, err, warn = _inner_limit_over_m(values_by_m, model)
        inner.append({"param": float(R), "limit": lim, "error": err})
        outer[1.0 / R] = lim
        warnings = warnings + warn
    res = extrapolate(outer, model=model)
    limit = res.limit
    total_error = res.error + max(row["error"] for row in inner)
    if limit > 1.0:
        total_error += limit - 1.0
        limit = 1.0
        warnings = warnings + ("limit clamped to 1",)
    return GapReport(functional="P", parameters={"t": t, "alpha": alpha, "shape": shape,
                                                 "model": model, "R0_max": float(r0_max)},
                     ladder=ladder_rows, inner_limits=inner, limit=limit,
                     error=total_error, warnings=tuple(dict.fromkeys(res.warnings + warnings)),
                     meanvalue=mv_rows)
