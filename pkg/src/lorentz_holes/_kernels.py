"""Compiled inner loops: the finite-horizon line sweep and the batch free-flight stepper.

The stepper performs exactly the floating-point operations of
:func:`lorentz_holes.billiard_core.billiard_map`, in the same order, so the
two agree bitwise (asserted in the tests).
"""

import math

import numpy as np
from numba import njit

_TANGENT = 1e-12
_MIN_FLIGHT = 1e-12


@njit(cache=True)
def _max_gap(starts, ends, count, window):
    # insertion sort by start; count is small (tens)
    for i in range(1, count):
        s, e = starts[i], ends[i]
        j = i - 1
        while j >= 0 and starts[j] > s:
            starts[j + 1] = starts[j]
            ends[j + 1] = ends[j]
            j -= 1
        starts[j + 1] = s
        ends[j + 1] = e
    if count == 0:
        return 2.0 * window, 2.0 * window
    inner = 0.0
    reach = ends[0]
    for i in range(1, count):
        if starts[i] > reach:
            gap = starts[i] - reach
            if gap > inner:
                inner = gap
        if ends[i] > reach:
            reach = ends[i]
    edge = max(starts[0] + window, window - reach)
    return inner, edge


@njit(cache=True)
def horizon_sweep(centers, radii, width, height, thetas, n_offsets):
    """Longest scatterer-free chord over a grid of lines.

    Returns (worst gap, direction of the worst gap, direction of an open
    corridor or -1.0 if none was found).
    """
    window = 6.0
    rmax = radii.max()
    reach_x = int(math.ceil((window + rmax) / width)) + 1
    reach_y = int(math.ceil((window + rmax) / height)) + 1
    n_base = centers.shape[0]
    n_img = n_base * (2 * reach_x + 1) * (2 * reach_y + 1)
    px = np.empty(n_img)
    py = np.empty(n_img)
    pr = np.empty(n_img)
    k = 0
    for i in range(n_base):
        for a in range(-reach_x, reach_x + 1):
            for b in range(-reach_y, reach_y + 1):
                x = centers[i, 0] + a * width
                y = centers[i, 1] + b * height
                if x * x + y * y <= (window + radii[i]) ** 2:
                    px[k] = x
                    py[k] = y
                    pr[k] = radii[i]
                    k += 1
    px = px[:k]
    py = py[:k]
    pr = pr[:k]
    starts = np.empty(k)
    ends = np.empty(k)
    worst = 0.0
    worst_theta = 0.0
    for it in range(thetas.shape[0]):
        theta = thetas[it]
        ux, uy = math.cos(theta), math.sin(theta)
        nx, ny = -uy, ux
        periods = (abs(nx) * width, abs(ny) * height)
        period = periods[0]
        if period < 1e-15 or (periods[1] > 1e-15 and periods[1] < period):
            period = periods[1]
        rho = px * nx + py * ny
        along = px * ux + py * uy
        order = np.argsort(rho)
        rho_s = rho[order]
        for ip in range(n_offsets):
            p = period * (ip + 0.5) / n_offsets
            lo = np.searchsorted(rho_s, p - rmax)
            hi = np.searchsorted(rho_s, p + rmax)
            count = 0
            for jj in range(lo, hi):
                j = order[jj]
                d = rho[j] - p
                r = pr[j]
                if d * d < r * r:
                    half = math.sqrt(r * r - d * d)
                    if abs(along[j]) < window:
                        starts[count] = along[j] - half
                        ends[count] = along[j] + half
                        count += 1
            inner, edge = _max_gap(starts, ends, count, window)
            if inner > window / 3.0 or edge > window / 3.0:
                return worst, worst_theta, theta
            if inner > worst:
                worst = inner
                worst_theta = theta
    return worst, worst_theta, -1.0


@njit(cache=True)
def advance(x, y, vx, vy, n_steps, disk_cx, disk_cy, disk_r, horizon, torus, kappas, heights):
    """Advance every particle ``n_steps`` collisions with no wall present.

    ``kappas[p, k]`` receives the horizontal projection of flight k + 1 and
    ``heights[p, k]`` the height at which that flight crossed the line x = 0,
    or NaN.  Returns a status array: 0 ok, 1 no collision within horizon.
    State arrays are updated in place.
    """
    n_particles = x.shape[0]
    reach = int(math.ceil(horizon)) + 1
    n_disks = disk_r.shape[0]
    status = np.zeros(n_particles, dtype=np.int8)
    for p in range(n_particles):
        qx, qy, ux, uy = x[p], y[p], vx[p], vy[p]
        for k in range(n_steps):
            cell_x = math.floor(qx)
            cell_y = math.floor(qy) if torus else 0.0
            best_t = np.inf
            kind = -1
            bcx = 0.0
            bcy = 0.0
            br = 0.0
            for d in range(n_disks):
                r = disk_r[d]
                for a in range(-reach, reach + 1):
                    ccx = disk_cx[d] + (cell_x + a)
                    dx = qx - ccx
                    if abs(dx) > horizon + r:
                        continue
                    b_lo = -reach if torus else 0
                    b_hi = reach if torus else 0
                    for b in range(b_lo, b_hi + 1):
                        ccy = disk_cy[d] + (cell_y + b)
                        dy = qy - ccy
                        proj = dx * ux + dy * uy
                        if proj >= 0.0:
                            continue
                        disc = proj * proj - (dx * dx + dy * dy - r * r)
                        if disc < _TANGENT:
                            continue
                        t = -proj - math.sqrt(disc)
                        if _MIN_FLIGHT < t and t < best_t:
                            best_t = t
                            kind = 0
                            bcx = ccx
                            bcy = ccy
                            br = r
            if not torus:
                if uy < 0.0:
                    t = -qy / uy
                    if _MIN_FLIGHT < t and t < best_t:
                        best_t = t
                        kind = 1
                elif uy > 0.0:
                    t = (1.0 - qy) / uy
                    if _MIN_FLIGHT < t and t < best_t:
                        best_t = t
                        kind = 2
            if kind < 0 or best_t > horizon * (1.0 + 1e-6):
                status[p] = 1
                for kk in range(k, n_steps):
                    kappas[p, kk] = np.nan
                    heights[p, kk] = np.nan
                break
            kappa = best_t * ux
            kappas[p, k] = kappa
            hx = qx + kappa
            hy = qy + best_t * uy
            if kind == 0:
                nx = (hx - bcx) / br
                ny = (hy - bcy) / br
            elif kind == 1:
                hy = 0.0
                nx, ny = 0.0, 1.0
            else:
                hy = 1.0
                nx, ny = 0.0, -1.0
            if (qx < 0.0) != (hx < 0.0):
                h = qy + (-qx) * (uy / ux)
                if torus:
                    h = h - math.floor(h)
                heights[p, k] = h
            else:
                heights[p, k] = np.nan
            dot = ux * nx + uy * ny
            wx = ux - 2.0 * dot * nx
            wy = uy - 2.0 * dot * ny
            norm = math.sqrt(wx * wx + wy * wy)
            ux = wx / norm
            uy = wy / norm
            qx = hx
            qy = hy
        x[p], y[p], vx[p], vy[p] = qx, qy, ux, uy
    return status
