"""Compiled neighbor-sum kernels (cell list and all-pairs reference path).

Both kernels accumulate, for every particle i, the sums over all particles j
with periodic minimum-image distance |x_i - x_j| <= R (including j = i):

    sum cos(theta_j), sum sin(theta_j), sum omega_j, count

The cell-list kernel sorts particles into an ncell x ncell grid with cell
edge >= R and visits each unordered pair exactly once through a half
stencil (E, N, NE, NW), adding the contribution to both members.  Periodic
wrap is handled per cell pair with a precomputed coordinate shift, so the
inner loop has no branches on the boundary.

Everything runs single-threaded with a fixed iteration order, which makes
the accumulated sums bitwise reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _build_cells(x, L, ncell):
    """Counting sort of particles into row-major cells.

    Returns (order, start): particle indices grouped by cell, ascending
    within each cell, and per-cell offsets into ``order`` (length
    ncell*ncell + 1).
    """
    n = x.shape[0]
    csize = L / ncell
    ncells = ncell * ncell
    cell = np.empty(n, np.int64)
    for i in range(n):
        cx = int(x[i, 0] / csize)
        cy = int(x[i, 1] / csize)
        if cx >= ncell:
            cx = ncell - 1
        if cy >= ncell:
            cy = ncell - 1
        cell[i] = cx + ncell * cy
    start = np.zeros(ncells + 1, np.int64)
    for i in range(n):
        start[cell[i] + 1] += 1
    for c in range(ncells):
        start[c + 1] += start[c]
    order = np.empty(n, np.int64)
    fill = start[:-1].copy()
    for i in range(n):
        c = cell[i]
        order[fill[c]] = i
        fill[c] += 1
    return order, start


@njit(cache=True)
def _accumulate_cells(x, ct, st, om, order, start, nbr, shiftx, shifty, r2,
                      sumc, sums, sumo, cnt):
    n = x.shape[0]
    for i in range(n):
        sumc[i] = ct[i]
        sums[i] = st[i]
        sumo[i] = om[i]
        cnt[i] = 1.0
    ncells = start.shape[0] - 1
    for c in range(ncells):
        a0 = start[c]
        a1 = start[c + 1]
        # pairs within the cell (never straddle the boundary)
        for ii in range(a0, a1):
            i = order[ii]
            xi = x[i, 0]
            yi = x[i, 1]
            for jj in range(ii + 1, a1):
                j = order[jj]
                dx = xi - x[j, 0]
                dy = yi - x[j, 1]
                if dx * dx + dy * dy <= r2:
                    sumc[i] += ct[j]
                    sums[i] += st[j]
                    sumo[i] += om[j]
                    cnt[i] += 1.0
                    sumc[j] += ct[i]
                    sums[j] += st[i]
                    sumo[j] += om[i]
                    cnt[j] += 1.0
        # half stencil across cell faces; shift moves the neighbor cell next
        # to this one when the pair wraps around the domain
        for k in range(4):
            c2 = nbr[c, k]
            sx = shiftx[c, k]
            sy = shifty[c, k]
            b0 = start[c2]
            b1 = start[c2 + 1]
            for ii in range(a0, a1):
                i = order[ii]
                xi = x[i, 0]
                yi = x[i, 1]
                for jj in range(b0, b1):
                    j = order[jj]
                    dx = xi - (x[j, 0] + sx)
                    dy = yi - (x[j, 1] + sy)
                    if dx * dx + dy * dy <= r2:
                        sumc[i] += ct[j]
                        sums[i] += st[j]
                        sumo[i] += om[j]
                        cnt[i] += 1.0
                        sumc[j] += ct[i]
                        sums[j] += st[i]
                        sumo[j] += om[i]
                        cnt[j] += 1.0


@njit(cache=True)
def _accumulate_allpairs(x, ct, st, om, L, r2, sumc, sums, sumo, cnt):
    """Reference path for domains too small for a 3x3 cell grid."""
    n = x.shape[0]
    half = 0.5 * L
    for i in range(n):
        sumc[i] = ct[i]
        sums[i] = st[i]
        sumo[i] = om[i]
        cnt[i] = 1.0
    for i in range(n):
        xi = x[i, 0]
        yi = x[i, 1]
        for j in range(i + 1, n):
            dx = xi - x[j, 0]
            dy = yi - x[j, 1]
            if dx > half:
                dx -= L
            elif dx < -half:
                dx += L
            if dy > half:
                dy -= L
            elif dy < -half:
                dy += L
            if dx * dx + dy * dy <= r2:
                sumc[i] += ct[j]
                sums[i] += st[j]
                sumo[i] += om[j]
                cnt[i] += 1.0
                sumc[j] += ct[i]
                sums[j] += st[i]
                sumo[j] += om[i]
                cnt[j] += 1.0


_STENCIL = ((1, 0), (0, 1), (1, 1), (-1, 1))  # E, N, NE, NW
_neighbor_tables: dict = {}


def neighbor_tables(ncell: int, L: float):
    """Half-stencil neighbor ids and wrap shifts for an ncell x ncell grid."""
    key = (ncell, float(L))
    cached = _neighbor_tables.get(key)
    if cached is not None:
        return cached
    ncells = ncell * ncell
    nbr = np.empty((ncells, 4), np.int64)
    shiftx = np.zeros((ncells, 4), np.float64)
    shifty = np.zeros((ncells, 4), np.float64)
    for cy in range(ncell):
        for cx in range(ncell):
            c = cx + ncell * cy
            for k, (dx, dy) in enumerate(_STENCIL):
                nx, ny = cx + dx, cy + dy
                sx = sy = 0.0
                if nx >= ncell:
                    nx -= ncell
                    sx = L
                elif nx < 0:
                    nx += ncell
                    sx = -L
                if ny >= ncell:
                    ny -= ncell
                    sy = L
                nbr[c, k] = nx + ncell * ny
                shiftx[c, k] = sx
                shifty[c, k] = sy
    _neighbor_tables[key] = (nbr, shiftx, shifty)
    return nbr, shiftx, shifty


def cell_count(L: float, R: float) -> int:
    """Largest grid dimension whose cell edge still covers the radius R."""
    ncell = int(L / R)
    while ncell > 1 and L / ncell < R:
        ncell -= 1
    return max(ncell, 1)


def neighbor_sums(x, ct, st, om, L: float, R: float):
    """Dispatch to the cell-list or all-pairs kernel; returns raw sums.

    Output: (sumc, sums, sumo, cnt) arrays of shape (n,), self included.
    """
    n = x.shape[0]
    sumc = np.empty(n)
    sums = np.empty(n)
    sumo = np.empty(n)
    cnt = np.empty(n)
    r2 = R * R
    ncell = cell_count(L, R)
    if ncell >= 3:
        order, start = _build_cells(x, L, ncell)
        nbr, shiftx, shifty = neighbor_tables(ncell, L)
        _accumulate_cells(x, ct, st, om, order, start, nbr, shiftx, shifty,
                          r2, sumc, sums, sumo, cnt)
    else:
        _accumulate_allpairs(x, ct, st, om, L, r2, sumc, sums, sumo, cnt)
    return sumc, sums, sumo, cnt
