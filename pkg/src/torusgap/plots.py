"""Self-contained SVG line plots, rendered without a display server."""
from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

__all__ = ["trajectory_svg", "ladder_svg", "excursions_svg"]

_KIND_COLORS = {11: "tab:blue", 12: "tab:red", 21: "tab:orange", 22: "tab:purple"}


def _save(fig: Figure, path) -> None:
    FigureCanvasSVG(fig).print_svg(str(path))


def trajectory_svg(traj, path, title: str = "") -> None:
    """Energy and dissipation series of one run, shared time axis."""
    fig = Figure(figsize=(7, 4.5))
    ax1, ax2 = fig.subplots(2, 1, sharex=True)
    ax1.plot(traj.times, traj.E, lw=1.2, color="tab:blue")
    ax1.set_ylabel(r"$\|v\|_2^2$")
    ax2.plot(traj.times, traj.D, lw=1.2, color="tab:red")
    ax2.set_ylabel(r"$\|\nabla v\|_2^2$")
    ax2.set_xlabel("time")
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def ladder_svg(report, path) -> None:
    """Ladder values per smoothing index with the extrapolated limit."""
    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    by_m: dict = {}
    for row in report.ladder:
        by_m.setdefault(row["m"], []).append((row["param"], row["value"]))
    for m, pts in sorted(by_m.items()):
        pts.sort()
        ax.plot([p for p, _ in pts], [v for _, v in pts], "o-", ms=4, lw=1, label=f"m={m}")
    ax.axhline(report.limit, color="k", lw=0.8, ls="--",
               label=f"limit {report.limit:.3g} +- {report.error:.2g}")
    ax.set_xlabel("ladder parameter")
    ax.set_ylabel(f"{report.functional} ladder value")
    ax.set_xscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def excursions_svg(times, D, R, eset, path, title: str = "") -> None:
    """Dissipation series with the shaded band and classified intervals."""
    times = np.asarray(times)
    D = np.asarray(D)
    fig = Figure(figsize=(7, 4))
    ax = fig.subplots()
    ax.plot(times, D, lw=1.0, color="0.3")
    ax.axhspan(R, 2 * R, color="tab:green", alpha=0.15, label=f"band ({R:g}, {2*R:g})")
    ax.axhline(R, color="tab:green", lw=0.8)
    ax.axhline(2 * R, color="tab:green", lw=0.8)
    seen = set()
    for exc in eset.excursions:
        label = f"kind {exc.kind}" if exc.kind not in seen else None
        seen.add(exc.kind)
        ax.axvspan(exc.t_start, exc.t_end, color=_KIND_COLORS[exc.kind], alpha=0.35, label=label)
    ax.set_xlabel("time")
    ax.set_ylabel(r"$\|\nabla v\|_2^2$")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    _save(fig, path)
