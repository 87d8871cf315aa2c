"""Pure-Python band-scan kernels (fallback for the compiled extension).

Both kernels walk the piecewise-linear interpolant of a sampled series and
treat the open band (r, 2r) with closed complement: a point exactly at a
level belongs to the complement, so a tangential touch splits an excursion.
``torusgap._scan`` implements the same contract in Cython; the two are
interchangeable and equivalence-tested.
"""
from __future__ import annotations

import numpy as np

COMPILED = False


def scan_band(t, d, r):
    """Maximal open-band excursions of the interpolant of (t, d).

    Requires d[0] < r and d[-1] < r (the caller validates).  Returns
    (starts, ends, entries, exits) with entry/exit codes 1 for the lower
    level r and 2 for the upper level 2r.
    """
    t = np.asarray(t, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    r2 = 2.0 * r
    starts: list[float] = []
    ends: list[float] = []
    entries: list[int] = []
    exits: list[int] = []
    inside = False
    side = 1  # 1 below the band, 2 above; d[0] < r guarantees the start
    cur_start = 0.0
    cur_entry = 0

    for i in range(len(t) - 1):
        t0, y0, t1, y1 = t[i], d[i], t[i + 1], d[i + 1]
        # strict interior crossings of either level inside the panel
        events = []
        for lvl in (r, r2):
            if (y0 - lvl) * (y1 - lvl) < 0.0:
                theta = (lvl - y0) / (y1 - y0)
                events.append((t0 + theta * (t1 - t0), lvl))
        if len(events) == 2 and events[0][0] > events[1][0]:
            events.reverse()
        pts = [(t0, y0)] + events + [(t1, y1)]
        for j in range(len(pts) - 1):
            ta, ya = pts[j]
            yb = pts[j + 1][1]
            at_lower = ya == r
            at_upper = ya == r2
            if inside and (at_lower or at_upper):
                if ta > cur_start:  # drop zero-width round-off artifacts
                    starts.append(cur_start)
                    ends.append(ta)
                    entries.append(cur_entry)
                    exits.append(1 if at_lower else 2)
                inside = False
                side = 1 if at_lower else 2
            mid = 0.5 * (ya + yb)
            if not inside:
                if r < mid < r2:
                    inside = True
                    cur_start = ta
                    # a level node names the entry; otherwise (round-off has
                    # nudged the entry past the node) the running side does
                    if at_lower or at_upper:
                        cur_entry = 1 if at_lower else 2
                    else:
                        cur_entry = side
                elif mid <= r:
                    side = 1
                else:
                    side = 2
    if inside:
        raise ValueError("series ends inside the band; endpoint precondition violated")
    return (
        np.asarray(starts, dtype=np.float64),
        np.asarray(ends, dtype=np.float64),
        np.asarray(entries, dtype=np.int8),
        np.asarray(exits, dtype=np.int8),
    )


def band_integrals(t, d, r):
    """Exact segment-wise integrals of the interpolant against the band.

    Returns (integral of d^2 over the band, integral of p(d)*d over the
    whole window, band measure) where p is the linear plateau cutoff equal
    to 1 below r, (2r - rho)/r on (r, 2r) and 0 above 2r.
    """
    t = np.asarray(t, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    r2 = 2.0 * r
    acc_d2 = 0.0
    acc_pd = 0.0
    measure = 0.0

    for i in range(len(t) - 1):
        t0, y0, t1, y1 = t[i], d[i], t[i + 1], d[i + 1]
        events = []
        for lvl in (r, r2):
            if (y0 - lvl) * (y1 - lvl) < 0.0:
                theta = (lvl - y0) / (y1 - y0)
                events.append((t0 + theta * (t1 - t0), lvl))
        if len(events) == 2 and events[0][0] > events[1][0]:
            events.reverse()
        pts = [(t0, y0)] + events + [(t1, y1)]
        for j in range(len(pts) - 1):
            ta, ya = pts[j]
            tb, yb = pts[j + 1]
            dt = tb - ta
            if dt <= 0.0:
                continue
            mid = 0.5 * (ya + yb)
            int_y = dt * 0.5 * (ya + yb)
            if mid <= r:
                acc_pd += int_y
            elif mid < r2:
                int_y2 = dt * (ya * ya + ya * yb + yb * yb) / 3.0
                acc_pd += (2.0 * r * int_y - int_y2) / r
                acc_d2 += int_y2
                measure += dt
            # above 2r the cutoff vanishes
    return acc_d2, acc_pd, measure
