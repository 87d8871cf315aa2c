"""Run, sweep and analysis orchestration with flat-file persistence.

Layout produced under the output directory:

* run:    run_record.json, config.yaml, trajectory.csv, ledger.json, ledger.csv
* sweep:  sweep_record.json, gap_report.json, runs/m008/..., runs/m016/...
* analyze: ledger.csv, gap_report_{G,H,P}.json, excursion_report.json,
  excursions.csv, analysis_summary.json and plots/*.svg.

Reruns of an identical configuration reproduce byte-identical trajectory
CSVs; every JSON report embeds the config hash and the tool version.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor

import yaml

from . import __version__
from .config import ExperimentConfig, config_hash, initial_condition, parse_config
from .errors import PreconditionError, TorusGapError
from .excursions import decompose, measure_bound_check, mee_identity_check
from .gaps import (
    GapReport,
    exponential_weight,
    gap_ladder,
    meanvalue_ladder,
    reciprocal_weight,
)
from .ledger import ledger_report, worst_residual, write_ledger_csv
from .plots import excursions_svg, ladder_svg, trajectory_svg
from .quadrature import trapezoid
from .reports import to_jsonable, write_report
from .solver import quadrature_tolerance, read_trajectory_csv, run, write_trajectory_csv

__all__ = ["run_experiment", "sweep_experiment", "analyze_path", "RUN_RECORD", "SWEEP_RECORD"]

RUN_RECORD = "run_record.json"
SWEEP_RECORD = "sweep_record.json"


def _weight_from_spec(spec: dict):
    kind = spec.get("kind", "reciprocal")
    K = float(spec.get("K", 1.0))
    if kind == "reciprocal":
        return reciprocal_weight(K)
    if kind == "exponential":
        return exponential_weight(K)
    raise TorusGapError(f"unknown weight kind {kind!r}")


def run_experiment(cfg: ExperimentConfig, out_dir, m: int | None = None,
                   seed_override: int | None = None) -> dict:
    """Simulate one configuration and persist its artifacts."""
    os.makedirs(out_dir, exist_ok=True)
    chash = config_hash(cfg)
    solver_cfg = cfg.solver_config(m=m)
    v0 = initial_condition(cfg, solver_cfg.grid, seed_override=seed_override)
    traj = run(solver_cfg, v0)

    write_trajectory_csv(traj, os.path.join(out_dir, "trajectory.csv"))
    with open(os.path.join(out_dir, "config.yaml"), "w", encoding="ascii") as fh:
        yaml.safe_dump(to_jsonable(cfg.resolved()), fh, sort_keys=True)

    s = cfg.analysis["s"]
    t = min(cfg.analysis["t"], float(traj.times[-1]))
    rep = ledger_report(traj, s, t)
    ledger_payload = {
        "s": rep.s, "t": rep.t, "residual": rep.residual, "p_ratio": rep.p_ratio,
        "inequality_ok": rep.inequality_ok,
        "worst_residual": worst_residual(traj),
        "quadrature_tolerance": quadrature_tolerance(traj),
        "E0": float(traj.E[0]),
    }
    write_report({"ledger": ledger_payload}, os.path.join(out_dir, "ledger.json"), chash)
    write_ledger_csv([rep], os.path.join(out_dir, "ledger.csv"))

    record = {
        "kind": "run",
        "name": cfg.name,
        "config_hash": chash,
        "m": int(solver_cfg.m),
        "version": __version__,
        "trajectory_csv": "trajectory.csv",
        "reports": {"ledger": "ledger.json", "ledger_csv": "ledger.csv"},
        "samples": int(len(traj.times)),
    }
    write_report(record, os.path.join(out_dir, RUN_RECORD), chash)
    return record


def _sweep_point(resolved_cfg: dict, m: int, point_dir: str, seed_override):
    cfg = parse_config(resolved_cfg)
    return run_experiment(cfg, point_dir, m=m, seed_override=seed_override)


def sweep_experiment(cfg: ExperimentConfig, out_dir, jobs: int = 1,
                     seed_override: int | None = None) -> dict:
    """One run per sweep ladder point plus an aggregated gap report.

    A failing point is recorded as failed and does not abort the other
    points; the returned record lists per-point status.
    """
    if not cfg.sweep.get("m"):
        raise TorusGapError("sweep requires a non-empty sweep.m ladder in the config")
    os.makedirs(out_dir, exist_ok=True)
    chash = config_hash(cfg)
    points = []
    ms = cfg.sweep["m"]
    dirs = {m: os.path.join(out_dir, "runs", f"m{m:03d}") for m in ms}

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                m: pool.submit(_sweep_point, cfg.resolved(), m, dirs[m], seed_override)
                for m in ms
            }
            for m in ms:
                try:
                    futures[m].result()
                    points.append({"m": m, "status": "ok",
                                   "dir": os.path.relpath(dirs[m], out_dir)})
                except Exception as exc:
                    points.append({"m": m, "status": "failed", "error": str(exc)})
    else:
        for m in ms:
            try:
                run_experiment(cfg, dirs[m], m=m, seed_override=seed_override)
                points.append({"m": m, "status": "ok",
                               "dir": os.path.relpath(dirs[m], out_dir)})
            except (TorusGapError, ValueError, FloatingPointError) as exc:
                points.append({"m": m, "status": "failed", "error": str(exc)})

    ok_points = [p for p in points if p["status"] == "ok"]
    record = {
        "kind": "sweep",
        "name": cfg.name,
        "config_hash": chash,
        "version": __version__,
        "points": points,
        "n_ok": len(ok_points),
        "n_failed": len(points) - len(ok_points),
    }

    if ok_points:
        trajs = {p["m"]: read_trajectory_csv(os.path.join(out_dir, p["dir"], "trajectory.csv"))
                 for p in ok_points}
        s = cfg.analysis["s"]
        t = min(cfg.analysis["t"], min(float(tr.times[-1]) for tr in trajs.values()))
        gap = _gap_reports(trajs, cfg, s, t)
        write_report({"gap_reports": {k: v.to_dict() for k, v in gap.items()}},
                     os.path.join(out_dir, "gap_report.json"), chash)
        record["reports"] = {"gap": "gap_report.json"}
    write_report(record, os.path.join(out_dir, SWEEP_RECORD), chash)
    return record


def _gap_reports(trajs: dict, cfg: ExperimentConfig, s: float, t: float) -> dict:
    a = cfg.analysis
    out: dict[str, GapReport] = {}
    weight = _weight_from_spec(a["weight"])
    if "G" in a["functionals"]:
        out["G"] = gap_ladder(trajs, s, t, functional="G", weight=weight,
                              param_ladder=a["beta_ladder"], model=a["extrapolation"])
    if "H" in a["functionals"]:
        out["H"] = gap_ladder(trajs, s, t, functional="H", K=float(a["weight"].get("K", 1.0)),
                              param_ladder=a["beta_ladder"], model=a["extrapolation"])
    if "P" in a["functionals"]:
        out["P"] = meanvalue_ladder(trajs, t, alpha=a["alpha"], r_factors=a["r_factors"],
                                    shape=a["cutoff_shape"])
    return out


# ----------------------------------------------------------------------
# analyze
# ----------------------------------------------------------------------

def _load_run_config(run_dir) -> ExperimentConfig:
    with open(os.path.join(run_dir, "config.yaml"), encoding="ascii") as fh:
        return parse_config(yaml.safe_load(fh))


def _load_trajectories(path):
    """Return ({m: trajectory}, stored config, 'run' or 'sweep')."""
    if os.path.isfile(os.path.join(path, SWEEP_RECORD)):
        with open(os.path.join(path, SWEEP_RECORD), encoding="ascii") as fh:
            record = json.load(fh)
        trajs = {}
        cfg = None
        for p in record["points"]:
            if p["status"] != "ok":
                continue
            pdir = os.path.join(path, p["dir"])
            trajs[int(p["m"])] = read_trajectory_csv(os.path.join(pdir, "trajectory.csv"))
            if cfg is None:
                cfg = _load_run_config(pdir)
        if not trajs:
            raise TorusGapError(f"sweep at {path} has no successful points to analyze")
        return trajs, cfg, "sweep"
    if os.path.isfile(os.path.join(path, RUN_RECORD)):
        with open(os.path.join(path, RUN_RECORD), encoding="ascii") as fh:
            record = json.load(fh)
        traj = read_trajectory_csv(os.path.join(path, record["trajectory_csv"]))
        return {int(record["m"]): traj}, _load_run_config(path), "run"
    raise TorusGapError(f"no {RUN_RECORD} or {SWEEP_RECORD} found under {path}")


def analyze_path(path, out_dir=None, cfg: ExperimentConfig | None = None) -> dict:
    """Gap, excursion and ledger reports plus SVG plots for a run or sweep."""
    trajs, stored_cfg, kind = _load_trajectories(path)
    cfg = cfg or stored_cfg
    chash = config_hash(cfg)
    out_dir = out_dir or os.path.join(path, "analysis")
    plots_dir = os.path.join(out_dir, "plots")
    os.makedirs(plots_dir, exist_ok=True)

    a = cfg.analysis
    any_traj = trajs[max(trajs)]
    s = a["s"]
    t = min(a["t"], float(any_traj.times[-1]))

    reports = [ledger_report(tr, s, t) for _, tr in sorted(trajs.items())]
    write_ledger_csv(reports, os.path.join(out_dir, "ledger.csv"))

    summary: dict = {"kind": kind, "s": s, "t": t,
                     "worst_residual": {m: worst_residual(tr) for m, tr in trajs.items()}}

    gap = _gap_reports(trajs, cfg, s, t)
    for name, rep in gap.items():
        write_report({"gap_report": rep.to_dict()},
                     os.path.join(out_dir, f"gap_report_{name}.json"), chash)
        ladder_svg(rep, os.path.join(plots_dir, f"ladder_{name}.svg"))
    if gap:
        summary["gap_limits"] = {k: {"limit": v.limit, "error": v.error}
                                 for k, v in gap.items()}

    if "E" in a["functionals"]:
        excursion_payload = _excursion_reports(trajs, cfg, s, t, out_dir, plots_dir)
        write_report({"excursions": excursion_payload},
                     os.path.join(out_dir, "excursion_report.json"), chash)
        summary["excursions"] = {
            "n_ladder_points": len(excursion_payload["ladder"]),
            "admissible": sum(1 for row in excursion_payload["ladder"] if row["admissible"]),
        }

    trajectory_svg(any_traj, os.path.join(plots_dir, "trajectory.svg"), title=cfg.name)
    write_report({"summary": summary}, os.path.join(out_dir, "analysis_summary.json"), chash)
    return summary


def _excursion_reports(trajs, cfg, s, t, out_dir, plots_dir) -> dict:
    """Band ladder per trajectory: counts, measures, sums, identity residuals."""
    a = cfg.analysis
    rows = []
    csv_rows = []
    plotted = False
    for m, traj in sorted(trajs.items()):
        i, j = traj.index_of(s), traj.index_of(t)
        dD = None if traj.dDdt is None else traj.dDdt[:j + 1]
        A = trapezoid(traj.D[:j + 1], traj.times[:j + 1], dD)
        r0 = A / (2.0 * t) if t > 0 else 0.0
        explicit = a.get("r_values")
        ladder = [float(r) for r in explicit] if explicit else [r0 * f for f in a["r_factors"]]
        for R in ladder:
            if R <= r0:
                raise PreconditionError(
                    f"requested band level R={R:g} is not above R0={r0:g} for m={m}")
            row = {"m": m, "R": R, "R0": r0, "admissible": False}
            if traj.D[i] < R and traj.D[j] < R:
                eset = decompose(traj.times, traj.D, R, s, t)
                rep = mee_identity_check(traj.times, traj.E, traj.D, R, s, t, eset=eset)
                row.update({
                    "admissible": True,
                    "counts": rep.counts,
                    "total_measure": eset.total_measure,
                    "measure_bound_ok": measure_bound_check(eset, float(traj.E[0])),
                    "e_sum": rep.e_sum,
                    "B": rep.B,
                    "mee_residual": rep.identity_residual,
                })
                for exc in eset.excursions:
                    csv_rows.append((m, R, exc.kind, exc.t_start, exc.t_end))
                if not plotted and eset.excursions:
                    excursions_svg(traj.times, traj.D, R, eset,
                                   os.path.join(plots_dir, "excursions.svg"),
                                   title=f"m={m}, R={R:g}")
                    plotted = True
            rows.append(row)
    if not plotted and rows:
        # no nontrivial decomposition: still render the band for one ladder point
        m, traj = max(trajs.items())
        ladder_R = rows[-1]["R"]
        try:
            eset = decompose(traj.times, traj.D, ladder_R, s, t)
            excursions_svg(traj.times, traj.D, ladder_R, eset,
                           os.path.join(plots_dir, "excursions.svg"),
                           title=f"m={m}, R={ladder_R:g}")
        except (PreconditionError, TorusGapError):
            pass
    with open(os.path.join(out_dir, "excursions.csv"), "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("m", "R", "kind", "t_start", "t_end"))
        for row in csv_rows:
            writer.writerow([row[0], repr(row[1]), row[2], repr(row[3]), repr(row[4])])
    return {"ladder": rows, "window": [s, t]}
