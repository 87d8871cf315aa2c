# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled band-scan kernels; contract identical to torusgap._scan_py."""
import numpy as np

cimport numpy as cnp

cnp.import_array()

COMPILED = True


def scan_band(t, d, double r):
    """Maximal open-band excursions; see torusgap._scan_py.scan_band."""
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0]
    cdef double r2 = 2.0 * r

    # a panel can close at most two excursions (touch node plus traverse)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] starts = np.empty(2 * n + 2, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ends = np.empty(2 * n + 2, dtype=np.float64)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] entries = np.empty(2 * n + 2, dtype=np.int8)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] exits = np.empty(2 * n + 2, dtype=np.int8)

    cdef Py_ssize_t count = 0
    cdef bint inside = False
    cdef int side = 1  # 1 below the band, 2 above; d[0] < r guarantees the start
    cdef double cur_start = 0.0
    cdef int cur_entry = 0

    cdef Py_ssize_t i, j, npts
    cdef double t0, y0, t1, y1, theta, ta, ya, yb, mid, lvl
    cdef double pt_t[4]
    cdef double pt_y[4]
    cdef double ev_t0, ev_y0, ev_t1, ev_y1
    cdef int nev
    cdef bint at_lower, at_upper

    for i in range(n - 1):
        t0 = tv[i]; y0 = dv[i]; t1 = tv[i + 1]; y1 = dv[i + 1]
        nev = 0
        ev_t0 = 0.0; ev_y0 = 0.0; ev_t1 = 0.0; ev_y1 = 0.0
        lvl = r
        if (y0 - lvl) * (y1 - lvl) < 0.0:
            theta = (lvl - y0) / (y1 - y0)
            ev_t0 = t0 + theta * (t1 - t0); ev_y0 = lvl; nev = 1
        lvl = r2
        if (y0 - lvl) * (y1 - lvl) < 0.0:
            theta = (lvl - y0) / (y1 - y0)
            if nev == 0:
                ev_t0 = t0 + theta * (t1 - t0); ev_y0 = lvl; nev = 1
            else:
                ev_t1 = t0 + theta * (t1 - t0); ev_y1 = lvl; nev = 2
                if ev_t0 > ev_t1:
                    ev_t0, ev_t1 = ev_t1, ev_t0
                    ev_y0, ev_y1 = ev_y1, ev_y0
        pt_t[0] = t0; pt_y[0] = y0
        npts = 1
        if nev >= 1:
            pt_t[npts] = ev_t0; pt_y[npts] = ev_y0; npts += 1
        if nev == 2:
            pt_t[npts] = ev_t1; pt_y[npts] = ev_y1; npts += 1
        pt_t[npts] = t1; pt_y[npts] = y1; npts += 1

        for j in range(npts - 1):
            ta = pt_t[j]; ya = pt_y[j]; yb = pt_y[j + 1]
            at_lower = (ya == r)
            at_upper = (ya == r2)
            if inside and (at_lower or at_upper):
                if ta > cur_start:
                    starts[count] = cur_start
                    ends[count] = ta
                    entries[count] = cur_entry
                    exits[count] = 1 if at_lower else 2
                    count += 1
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
    return starts[:count].copy(), ends[:count].copy(), entries[:count].copy(), exits[:count].copy()


def band_integrals(t, d, double r):
    """Band integrals of the interpolant; see torusgap._scan_py.band_integrals."""
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0]
    cdef double r2 = 2.0 * r

    cdef double acc_d2 = 0.0, acc_pd = 0.0, measure = 0.0
    cdef Py_ssize_t i, j, npts
    cdef double t0, y0, t1, y1, theta, ta, ya, tb, yb, dt, mid, int_y, int_y2, lvl
    cdef double pt_t[4]
    cdef double pt_y[4]
    cdef double ev_t0, ev_y0, ev_t1, ev_y1
    cdef int nev

    for i in range(n - 1):
        t0 = tv[i]; y0 = dv[i]; t1 = tv[i + 1]; y1 = dv[i + 1]
        nev = 0
        ev_t0 = 0.0; ev_y0 = 0.0; ev_t1 = 0.0; ev_y1 = 0.0
        lvl = r
        if (y0 - lvl) * (y1 - lvl) < 0.0:
            theta = (lvl - y0) / (y1 - y0)
            ev_t0 = t0 + theta * (t1 - t0); ev_y0 = lvl; nev = 1
        lvl = r2
        if (y0 - lvl) * (y1 - lvl) < 0.0:
            theta = (lvl - y0) / (y1 - y0)
            if nev == 0:
                ev_t0 = t0 + theta * (t1 - t0); ev_y0 = lvl; nev = 1
            else:
                ev_t1 = t0 + theta * (t1 - t0); ev_y1 = lvl; nev = 2
                if ev_t0 > ev_t1:
                    ev_t0, ev_t1 = ev_t1, ev_t0
                    ev_y0, ev_y1 = ev_y1, ev_y0
        pt_t[0] = t0; pt_y[0] = y0
        npts = 1
        if nev >= 1:
            pt_t[npts] = ev_t0; pt_y[npts] = ev_y0; npts += 1
        if nev == 2:
            pt_t[npts] = ev_t1; pt_y[npts] = ev_y1; npts += 1
        pt_t[npts] = t1; pt_y[npts] = y1; npts += 1

        for j in range(npts - 1):
            ta = pt_t[j]; ya = pt_y[j]
            tb = pt_t[j + 1]; yb = pt_y[j + 1]
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
    return acc_d2, acc_pd, measure
