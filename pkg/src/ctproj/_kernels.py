"""Numba kernels for the projector pairs.

Parallelization is over samples in the output space: detector samples for
forward projection, voxels for backprojection.  Each output element is
written by exactly one worker, with a fixed in-worker reduction order, so
results do not depend on the worker count.  Accumulation is float64,
storage float32.

Geometry kinds: 0 = parallel, 1 = cone flat, 2 = cone curved,
3 = modular (flat detector with explicit per-view pose).
"""

import math

import numpy as np
from numba import njit, prange

_EPS_DIR = 1e-12
_EPS_T = 1e-12


@njit(inline="always")
def _sample_ray(kind, view, row, col, src, c0, u, vax, w, pw, ph, cr, cc, sdd, back):
    """Ray (origin, unit direction) through pixel center (row, col)."""
    s = (col - cc) * pw
    t = (row - cr) * ph
    if kind == 0:
        px = c0[view, 0] + s * u[view, 0] + t * vax[view, 0]
        py = c0[view, 1] + s * u[view, 1] + t * vax[view, 1]
        pz = c0[view, 2] + s * u[view, 2] + t * vax[view, 2]
        return (
            px - back * w[view, 0],
            py - back * w[view, 1],
            pz - back * w[view, 2],
            w[view, 0],
            w[view, 1],
            w[view, 2],
        )
    if kind == 2:
        al = s / sdd
        ca = math.cos(al)
        sa = math.sin(al)
        px = src[view, 0] + sdd * (ca * w[view, 0] + sa * u[view, 0]) + t * vax[view, 0]
        py = src[view, 1] + sdd * (ca * w[view, 1] + sa * u[view, 1]) + t * vax[view, 1]
        pz = src[view, 2] + sdd * (ca * w[view, 2] + sa * u[view, 2]) + t * vax[view, 2]
    else:
        px = c0[view, 0] + s * u[view, 0] + t * vax[view, 0]
        py = c0[view, 1] + s * u[view, 1] + t * vax[view, 1]
        pz = c0[view, 2] + s * u[view, 2] + t * vax[view, 2]
    dx = px - src[view, 0]
    dy = py - src[view, 1]
    dz = pz - src[view, 2]
    nrm = math.sqrt(dx * dx + dy * dy + dz * dz)
    return (
        src[view, 0],
        src[view, 1],
        src[view, 2],
        dx / nrm,
        dy / nrm,
        dz / nrm,
    )


@njit(inline="always")
def _slab_clip(o, d, lo, hi, tmin, tmax, ok):
    if abs(d) > _EPS_DIR:
        t1 = (lo - o) / d
        t2 = (hi - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    elif o < lo or o >= hi:
        # half-open [lo, hi): a ray exactly in a boundary plane belongs to
        # the upper cell, matching the floor() of the traversal midpoint rule
        ok = False
    return tmin, tmax, ok


@njit(inline="always")
def _siddon_trace(vol, ox, oy, oz, dx, dy, dz, x0, y0, z0, hx, hz, nx, ny, nz):
    """Exact line integral of the voxel grid along one ray.

    Plane-crossing parameters are merged across axes; each interval is
    attributed to the voxel containing its midpoint.  Degenerate zero-length
    intervals (double crossings) contribute nothing.
    """
    tmin = -1.0e300
    tmax = 1.0e300
    ok = True
    tmin, tmax, ok = _slab_clip(ox, dx, x0, x0 + nx * hx, tmin, tmax, ok)
    tmin, tmax, ok = _slab_clip(oy, dy, y0, y0 + ny * hx, tmin, tmax, ok)
    tmin, tmax, ok = _slab_clip(oz, dz, z0, z0 + nz * hz, tmin, tmax, ok)
    if not ok or tmax - tmin < _EPS_T:
        return 0.0

    inf = 1.0e300
    # inactive axes keep a fixed index from the origin (half-open [lo, hi),
    # matching _slab_clip) instead of re-deriving it from the midpoint, where
    # a denormal-tiny direction component could drift across a boundary
    txn = inf
    stx = inf
    if abs(dx) > _EPS_DIR:
        stx = hx / abs(dx)
        pa = ox + tmin * dx
        k = math.floor((pa - x0) / hx)
        if dx > 0.0:
            txn = (x0 + (k + 1.0) * hx - ox) / dx
        else:
            txn = (x0 + k * hx - ox) / dx
        while txn <= tmin:
            txn += stx
    tyn = inf
    sty = inf
    if abs(dy) > _EPS_DIR:
        sty = hx / abs(dy)
        pa = oy + tmin * dy
        k = math.floor((pa - y0) / hx)
        if dy > 0.0:
            tyn = (y0 + (k + 1.0) * hx - oy) / dy
        else:
            tyn = (y0 + k * hx - oy) / dy
        while tyn <= tmin:
            tyn += sty
    tzn = inf
    stz = inf
    if abs(dz) > _EPS_DIR:
        stz = hz / abs(dz)
        pa = oz + tmin * dz
        k = math.floor((pa - z0) / hz)
        if dz > 0.0:
            tzn = (z0 + (k + 1.0) * hz - oz) / dz
        else:
            tzn = (z0 + k * hz - oz) / dz
        while tzn <= tmin:
            tzn += stz

    # the index is refined by direct comparison against the cell boundaries
    # a0 + k*h so it agrees exactly with _ray_box_len's interval arithmetic
    ix0 = -1
    if abs(dx) <= _EPS_DIR:
        ix0 = int(math.floor((ox - x0) / hx))
        while ox < x0 + ix0 * hx:
            ix0 -= 1
        while ox >= x0 + (ix0 + 1) * hx:
            ix0 += 1
    iy0 = -1
    if abs(dy) <= _EPS_DIR:
        iy0 = int(math.floor((oy - y0) / hx))
        while oy < y0 + iy0 * hx:
            iy0 -= 1
        while oy >= y0 + (iy0 + 1) * hx:
            iy0 += 1
    iz0 = -1
    if abs(dz) <= _EPS_DIR:
        iz0 = int(math.floor((oz - z0) / hz))
        while oz < z0 + iz0 * hz:
            iz0 -= 1
        while oz >= z0 + (iz0 + 1) * hz:
            iz0 += 1

    total = 0.0
    tcur = tmin
    while tcur < tmax - _EPS_T:
        tn = txn
        if tyn < tn:
            tn = tyn
        if tzn < tn:
            tn = tzn
        if tn > tmax:
            tn = tmax
        if tn > tcur + _EPS_T:
            tm = 0.5 * (tcur + tn)
            ix = ix0 if ix0 >= 0 else int(math.floor((ox + tm * dx - x0) / hx))
            iy = iy0 if iy0 >= 0 else int(math.floor((oy + tm * dy - y0) / hx))
            iz = iz0 if iz0 >= 0 else int(math.floor((oz + tm * dz - z0) / hz))
            if 0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz:
                total += (tn - tcur) * vol[iz, iy, ix]
        tcur = tn
        if txn <= tn + _EPS_T:
            txn += stx
        if tyn <= tn + _EPS_T:
            tyn += sty
        if tzn <= tn + _EPS_T:
            tzn += stz
    return total


@njit(parallel=True, cache=True, nogil=True)
def siddon_forward_kernel(
    vol, out, kind, src, c0, u, vax, w, pw, ph, cr, cc, sdd, back, x0, y0, z0, hx, hz
):
    nz, ny, nx = vol.shape
    nv, nr, nc = out.shape
    nray = nv * nr * nc
    for idx in prange(nray):
        view = idx // (nr * nc)
        rem = idx - view * (nr * nc)
        row = rem // nc
        col = rem - row * nc
        ox, oy, oz, dx, dy, dz = _sample_ray(
            kind, view, row, col, src, c0, u, vax, w, pw, ph, cr, cc, sdd, back
        )
        out[view, row, col] = _siddon_trace(
            vol, ox, oy, oz, dx, dy, dz, x0, y0, z0, hx, hz, nx, ny, nz
        )


@njit(inline="always")
def _ray_box_len(ox, oy, oz, dx, dy, dz, xlo, xhi, ylo, yhi, zlo, zhi):
    tmin = -1.0e300
    tmax = 1.0e300
    ok = True
    tmin, tmax, ok = _slab_clip(ox, dx, xlo, xhi, tmin, tmax, ok)
    tmin, tmax, ok = _slab_clip(oy, dy, ylo, yhi, tmin, tmax, ok)
    tmin, tmax, ok = _slab_clip(oz, dz, zlo, zhi, tmin, tmax, ok)
    if not ok or tmax <= tmin:
        return 0.0
    return tmax - tmin


@njit(inline="always")
def _project_center(kind, view, px, py, pz, src, c0, u, vax, w, sdd):
    """Detector (s, t) coordinates of the line src->p, plus magnification.

    Returns (ok, s, t, mag); ok == False means the projection is degenerate
    and the caller must scan the whole detector.
    """
    if kind == 0:
        s = (
            (px - c0[view, 0]) * u[view, 0]
            + (py - c0[view, 1]) * u[view, 1]
            + (pz - c0[view, 2]) * u[view, 2]
        )
        t = (
            (px - c0[view, 0]) * vax[view, 0]
            + (py - c0[view, 1]) * vax[view, 1]
            + (pz - c0[view, 2]) * vax[view, 2]
        )
        return True, s, t, 1.0
    rx = px - src[view, 0]
    ry = py - src[view, 1]
    rz = pz - src[view, 2]
    if kind == 2:
        a = rx * w[view, 0] + ry * w[view, 1] + rz * w[view, 2]
        b = rx * u[view, 0] + ry * u[view, 1] + rz * u[view, 2]
        rho = math.sqrt(a * a + b * b)
        # the angular shadow is only an interval while the point stays in
        # the forward half-space of the source (no wrap through +-pi)
        if rho < 1e-9 or a <= 0.0:
            return False, 0.0, 0.0, 0.0
        zz = rx * vax[view, 0] + ry * vax[view, 1] + rz * vax[view, 2]
        mag = sdd / rho
        return True, sdd * math.atan2(b, a), zz * mag, mag
    # flat detector: intersect the line with the detector plane
    nxv = u[view, 1] * vax[view, 2] - u[view, 2] * vax[view, 1]
    nyv = u[view, 2] * vax[view, 0] - u[view, 0] * vax[view, 2]
    nzv = u[view, 0] * vax[view, 1] - u[view, 1] * vax[view, 0]
    lamnum = (
        (c0[view, 0] - src[view, 0]) * nxv
        + (c0[view, 1] - src[view, 1]) * nyv
        + (c0[view, 2] - src[view, 2]) * nzv
    )
    den = rx * nxv + ry * nyv + rz * nzv
    if abs(den) < 1e-12 * (abs(lamnum) + 1.0):
        return False, 0.0, 0.0, 0.0
    lam = lamnum / den
    if lam <= 0.0:
        # point on or behind the source plane: its flat-detector shadow is
        # unbounded, so the caller must scan the whole detector
        return False, 0.0, 0.0, 0.0
    qx = src[view, 0] + lam * rx - c0[view, 0]
    qy = src[view, 1] + lam * ry - c0[view, 1]
    qz = src[view, 2] + lam * rz - c0[view, 2]
    s = qx * u[view, 0] + qy * u[view, 1] + qz * u[view, 2]
    t = qx * vax[view, 0] + qy * vax[view, 1] + qz * vax[view, 2]
    return True, s, t, abs(lam)


@njit(parallel=True, cache=True, nogil=True)
def siddon_back_kernel(
    y, out, kind, src, c0, u, vax, w, pw, ph, cr, cc, sdd, back, x0, y0, z0, hx, hz
):
    """Matched transpose: per voxel, gather length * y over candidate rays.

    Candidate detector windows are conservative (2x magnified voxel diagonal
    plus two pixels); the exact ray-box clip decides membership.
    """
    nz, ny, nx = out.shape
    nv, nr, nc = y.shape
    # curved detector: hoist the per-column pixel base point
    # src + sdd*(cos(a)*w + sin(a)*u); the expression (and therefore the
    # floating-point result) is identical to _sample_ray's, keeping the
    # gather an exact transpose of the forward trace
    pcol = np.empty((nv, nc, 3)) if kind == 2 else np.empty((1, 1, 3))
    if kind == 2:
        for view in range(nv):
            for col in range(nc):
                al = (col - cc) * pw / sdd
                ca = math.cos(al)
                sa = math.sin(al)
                for k in range(3):
                    pcol[view, col, k] = src[view, k] + sdd * (
                        ca * w[view, k] + sa * u[view, k]
                    )
    nvox = nz * ny * nx
    for idx in prange(nvox):
        iz = idx // (ny * nx)
        rem = idx - iz * (ny * nx)
        iy = rem // nx
        ix = rem - iy * nx
        xlo = x0 + ix * hx
        ylo = y0 + iy * hx
        zlo = z0 + iz * hz
        acc = 0.0
        for view in range(nv):
            # the rays hitting this convex box are bounded by the detector
            # shadow of its 8 corners; a degenerate corner projection falls
            # back to scanning the whole detector
            smin = 1.0e300
            smax = -1.0e300
            tmin = 1.0e300
            tmax = -1.0e300
            degen = False
            for corner in range(8):
                pcx = xlo + hx if corner & 1 else xlo
                pcy = ylo + hx if corner & 2 else ylo
                pcz = zlo + hz if corner & 4 else zlo
                ok, s, t, mag = _project_center(
                    kind, view, pcx, pcy, pcz, src, c0, u, vax, w, sdd
                )
                if not ok:
                    degen = True
                    break
                if s < smin:
                    smin = s
                if s > smax:
                    smax = s
                if t < tmin:
                    tmin = t
                if t > tmax:
                    tmax = t
            if not degen:
                cl = int(math.ceil(smin / pw + cc - 0.5)) - 1
                ch = int(math.floor(smax / pw + cc + 0.5)) + 1
                r0 = int(math.ceil(tmin / ph + cr - 0.5)) - 1
                r1 = int(math.floor(tmax / ph + cr + 0.5)) + 1
                if r0 < 0:
                    r0 = 0
                if r1 > nr - 1:
                    r1 = nr - 1
                if cl < 0:
                    cl = 0
                if ch > nc - 1:
                    ch = nc - 1
            else:
                r0, r1, cl, ch = 0, nr - 1, 0, nc - 1
            for row in range(r0, r1 + 1):
                for col in range(cl, ch + 1):
                    if kind == 2:
                        tcoord = (row - cr) * ph
                        px = pcol[view, col, 0] + tcoord * vax[view, 0]
                        py = pcol[view, col, 1] + tcoord * vax[view, 1]
                        pz = pcol[view, col, 2] + tcoord * vax[view, 2]
                        dx = px - src[view, 0]
                        dy = py - src[view, 1]
                        dz = pz - src[view, 2]
                        nrm = math.sqrt(dx * dx + dy * dy + dz * dz)
                        ox = src[view, 0]
                        oy = src[view, 1]
                        oz = src[view, 2]
                        dx /= nrm
                        dy /= nrm
                        dz /= nrm
                    else:
                        ox, oy, oz, dx, dy, dz = _sample_ray(
                            kind, view, row, col, src, c0, u, vax, w,
                            pw, ph, cr, cc, sdd, back,
                        )
                    ln = _ray_box_len(
                        ox, oy, oz, dx, dy, dz, xlo, xlo + hx, ylo, ylo + hx, zlo, zlo + hz
                    )
                    if ln > 0.0:
                        acc += ln * y[view, row, col]
        out[iz, iy, ix] = acc


# --- separable footprint (SF-TR) -------------------------------------------


@njit(inline="always")
def _sort4(a, b, c, d):
    if a > b:
        a, b = b, a
    if c > d:
        c, d = d, c
    if a > c:
        a, c = c, a
    if b > d:
        b, d = d, b
    if b > c:
        b, c = c, b
    return a, b, c, d


@njit(inline="always")
def _trap_cum(t0, t1, t2, t3, s):
    """Integral of the unit-height trapezoid from t0 up to s."""
    if s <= t0:
        return 0.0
    full = 0.5 * (t1 - t0) + (t2 - t1) + 0.5 * (t3 - t2)
    if s >= t3:
        return full
    if s < t1:
        return 0.5 * (s - t0) * (s - t0) / (t1 - t0)
    if s < t2:
        return 0.5 * (t1 - t0) + (s - t1)
    return full - 0.5 * (t3 - s) * (t3 - s) / (t3 - t2)


@njit(inline="always")
def _flat_plane_s(px, py, pz, view, src, c0, u, vax, nxv, nyv, nzv, lamnum):
    """Transverse detector coordinate of a point, via plane intersection."""
    rx = px - src[view, 0]
    ry = py - src[view, 1]
    rz = pz - src[view, 2]
    den = rx * nxv + ry * nyv + rz * nzv
    if abs(den) <= 1e-12:
        return 0.0, False
    lam = lamnum / den
    if lam <= 0.0:
        return 0.0, False
    qx = src[view, 0] + lam * rx - c0[view, 0]
    qy = src[view, 1] + lam * ry - c0[view, 1]
    qz = src[view, 2] + lam * rz - c0[view, 2]
    return qx * u[view, 0] + qy * u[view, 1] + qz * u[view, 2], True


@njit(inline="always")
def _sf_transverse(
    kind, view, src, c0, u, vax, w, sdd, nxv, nyv, nzv, lamnum, cx, cy, hxw, hyw
):
    """Trapezoid breakpoints and max transverse chord for one sub-voxel.

    The breakpoints are the detector s-coordinates of the projections of
    the four vertical edges of the (2*hxw x 2*hyw) transverse rectangle.
    Returns (tau0..tau3, lxy, axial magnification, ok).
    """
    s0 = s1 = s2 = s3 = 0.0
    ok = True
    if kind == 0:
        c0x = c0[view, 0]
        c0y = c0[view, 1]
        c0z = c0[view, 2]
        s0 = (cx - hxw - c0x) * u[view, 0] + (cy - hyw - c0y) * u[view, 1] - c0z * u[view, 2]
        s1 = (cx + hxw - c0x) * u[view, 0] + (cy - hyw - c0y) * u[view, 1] - c0z * u[view, 2]
        s2 = (cx - hxw - c0x) * u[view, 0] + (cy + hyw - c0y) * u[view, 1] - c0z * u[view, 2]
        s3 = (cx + hxw - c0x) * u[view, 0] + (cy + hyw - c0y) * u[view, 1] - c0z * u[view, 2]
        dxn = w[view, 0]
        dyn = w[view, 1]
        mag = 1.0
    else:
        dx = cx - src[view, 0]
        dy = cy - src[view, 1]
        rho = math.sqrt(dx * dx + dy * dy)
        if rho < 1e-9:
            return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, False
        dxn = dx / rho
        dyn = dy / rho
        if kind == 2:
            ax = dx * w[view, 0] + dy * w[view, 1]
            bx = dx * u[view, 0] + dy * u[view, 1]
            if ax <= 0.0:
                return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, False
            mag = sdd / rho
            e0x = cx - hxw - src[view, 0]
            e0y = cy - hyw - src[view, 1]
            s0 = sdd * math.atan2(
                e0x * u[view, 0] + e0y * u[view, 1], e0x * w[view, 0] + e0y * w[view, 1]
            )
            e1x = cx + hxw - src[view, 0]
            e1y = cy - hyw - src[view, 1]
            s1 = sdd * math.atan2(
                e1x * u[view, 0] + e1y * u[view, 1], e1x * w[view, 0] + e1y * w[view, 1]
            )
            e2x = cx - hxw - src[view, 0]
            e2y = cy + hyw - src[view, 1]
            s2 = sdd * math.atan2(
                e2x * u[view, 0] + e2y * u[view, 1], e2x * w[view, 0] + e2y * w[view, 1]
            )
            e3x = cx + hxw - src[view, 0]
            e3y = cy + hyw - src[view, 1]
            s3 = sdd * math.atan2(
                e3x * u[view, 0] + e3y * u[view, 1], e3x * w[view, 0] + e3y * w[view, 1]
            )
        else:
            s0, ok0 = _flat_plane_s(
                cx - hxw, cy - hyw, 0.0, view, src, c0, u, vax, nxv, nyv, nzv, lamnum
            )
            s1, ok1 = _flat_plane_s(
                cx + hxw, cy - hyw, 0.0, view, src, c0, u, vax, nxv, nyv, nzv, lamnum
            )
            s2, ok2 = _flat_plane_s(
                cx - hxw, cy + hyw, 0.0, view, src, c0, u, vax, nxv, nyv, nzv, lamnum
            )
            s3, ok3 = _flat_plane_s(
                cx + hxw, cy + hyw, 0.0, view, src, c0, u, vax, nxv, nyv, nzv, lamnum
            )
            if not (ok0 and ok1 and ok2 and ok3):
                return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, False
            rcx = cx - src[view, 0]
            rcy = cy - src[view, 1]
            den = rcx * nxv + rcy * nyv
            if abs(den) <= 1e-12:
                return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, False
            mag = lamnum / den
            if mag <= 0.0:
                return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, False
    t0, t1, t2, t3 = _sort4(s0, s1, s2, s3)
    big = 1.0e300
    la = 2.0 * hxw / abs(dxn) if abs(dxn) > 1e-12 else big
    lb = 2.0 * hyw / abs(dyn) if abs(dyn) > 1e-12 else big
    lxy = la if la < lb else lb
    return t0, t1, t2, t3, lxy, mag, True


@njit(inline="always")
def _sf_amplitude(kind, view, src, cx, cy, cz, lxy):
    """SF amplitude: max transverse chord over the cosine of the axial tilt
    of the ray through the sub-voxel center."""
    if kind == 0:
        return lxy
    dx = cx - src[view, 0]
    dy = cy - src[view, 1]
    dz = cz - src[view, 2]
    rho2 = dx * dx + dy * dy
    return lxy * math.sqrt(1.0 + dz * dz / rho2)


@njit(inline="always")
def _sf_subdivide(kind, view, u, w, hx, pw, t0, t3):
    """Split decision for very wide footprints (> 8 detector columns).

    Returns (nsub, axis): axis 0 splits along x, 1 along y.
    """
    if t3 - t0 <= 8.0 * pw:
        return 1, 0
    if abs(u[view, 0]) * hx >= abs(u[view, 1]) * hx:
        return 2, 0
    return 2, 1


@njit(cache=True, nogil=True)
def _sf_view_accumulate(
    vol, scratch, view, kind, src, c0, u, vax, w, pw, ph, cr, cc, sdd, x0, y0, z0, hx, hz
):
    """Forward-accumulate one view into a float64 scratch detector array."""
    nz, ny, nx = vol.shape
    nr, nc = scratch.shape
    nxv = u[view, 1] * vax[view, 2] - u[view, 2] * vax[view, 1]
    nyv = u[view, 2] * vax[view, 0] - u[view, 0] * vax[view, 2]
    nzv = u[view, 0] * vax[view, 1] - u[view, 1] * vax[view, 0]
    lamnum = (
        (c0[view, 0] - src[view, 0]) * nxv
        + (c0[view, 1] - src[view, 1]) * nyv
        + (c0[view, 2] - src[view, 2]) * nzv
    )
    tsbuf = np.empty(nc)
    half = 0.5 * hx
    for iy in range(ny):
        cy = y0 + (iy + 0.5) * hx
        for ix in range(nx):
            cx = x0 + (ix + 0.5) * hx
            t0, t1, t2, t3, lxy, mag, ok = _sf_transverse(
                kind, view, src, c0, u, vax, w, sdd, nxv, nyv, nzv, lamnum, cx, cy, half, half
            )
            if not ok:
                continue
            nsub, axis = _sf_subdivide(kind, view, u, w, hx, pw, t0, t3)
            for sub in range(nsub):
                if nsub == 1:
                    scx, scy, shx, shy = cx, cy, half, half
                elif axis == 0:
                    scx = cx + (sub - 0.5) * half
                    scy = cy
                    shx = 0.5 * half
                    shy = half
                else:
                    scx = cx
                    scy = cy + (sub - 0.5) * half
                    shx = half
                    shy = 0.5 * half
                if nsub > 1:
                    t0, t1, t2, t3, lxy, mag, ok = _sf_transverse(
                        kind, view, src, c0, u, vax, w, sdd, nxv, nyv, nzv, lamnum,
                        scx, scy, shx, shy,
                    )
                    if not ok:
                        continue
                cl = int(math.ceil(t0 / pw + cc - 0.5))
                ch = int(math.floor(t3 / pw + cc + 0.5))
                if cl < 0:
                    cl = 0
                if ch > nc - 1:
                    ch = nc - 1
                if cl > ch:
                    continue
                for col in range(cl, ch + 1):
                    sa = (col - cc) * pw - 0.5 * pw
                    tsbuf[col] = (
                        _trap_cum(t0, t1, t2, t3, sa + pw) - _trap_cum(t0, t1, t2, t3, sa)
                    ) / pw
                for iz in range(nz):
                    val = vol[iz, iy, ix]
                    if val == 0.0:
                        continue
                    cz = z0 + (iz + 0.5) * hz
                    if kind == 0:
                        tcen = (
                            (scx - c0[view, 0]) * vax[view, 0]
                            + (scy - c0[view, 1]) * vax[view, 1]
                            + (cz - c0[view, 2]) * vax[view, 2]
                        )
                    else:
                        tcen = mag * (cz - src[view, 2])
                    te = 0.5 * mag * hz
                    rl = int(math.ceil((tcen - te) / ph + cr - 0.5))
                    rh = int(math.floor((tcen + te) / ph + cr + 0.5))
                    if rl < 0:
                        rl = 0
                    if rh > nr - 1:
                        rh = nr - 1
                    if rl > rh:
                        continue
                    amp = _sf_amplitude(kind, view, src, scx, scy, cz, lxy)
                    for row in range(rl, rh + 1):
                        ta = (row - cr) * ph - 0.5 * ph
                        lo = tcen - te if tcen - te > ta else ta
                        hi = tcen + te if tcen + te < ta + ph else ta + ph
                        if hi <= lo:
                            continue
                        tt = (hi - lo) / ph
                        base = val * amp * tt
                        for col in range(cl, ch + 1):
                            scratch[row, col] += base * tsbuf[col]


@njit(parallel=True, cache=True, nogil=True)
def sf_forward_kernel(
    vol, out, kind, src, c0, u, vax, w, pw, ph, cr, cc, sdd, x0, y0, z0, hx, hz
):
    nv, nr, nc = out.shape
    for view in prange(nv):
        scratch = np.zeros((nr, nc))
        _sf_view_accumulate(
            vol, scratch, view, kind, src, c0, u, vax, w, pw, ph, cr, cc, sdd,
            x0, y0, z0, hx, hz,
        )
        for row in range(nr):
            for col in range(nc):
                out[view, row, col] = scratch[row, col]


@njit(parallel=True, cache=True, nogil=True)
def sf_back_kernel(
    y, out, kind, src, c0, u, vax, w, pw, ph, cr, cc, sdd, x0, y0, z0, hx, hz
):
    """Exact transpose of sf_forward_kernel: same coefficient arithmetic,
    gathered per voxel column (all z for one transverse position)."""
    nz, ny, nx = out.shape
    nv, nr, nc = y.shape
    half = 0.5 * hx
    npos = ny * nx
    for idx in prange(npos):
        iy = idx // nx
        ix = idx - iy * nx
        cx = x0 + (ix + 0.5) * hx
        cy = y0 + (iy + 0.5) * hx
        accs = np.zeros(nz)
        tsbuf = np.empty(nc)
        for view in range(nv):
            nxv = u[view, 1] * vax[view, 2] - u[view, 2] * vax[view, 1]
            nyv = u[view, 2] * vax[view, 0] - u[view, 0] * vax[view, 2]
            nzv = u[view, 0] * vax[view, 1] - u[view, 1] * vax[view, 0]
            lamnum = (
                (c0[view, 0] - src[view, 0]) * nxv
                + (c0[view, 1] - src[view, 1]) * nyv
                + (c0[view, 2] - src[view, 2]) * nzv
            )
            t0, t1, t2, t3, lxy, mag, ok = _sf_transverse(
                kind, view, src, c0, u, vax, w, sdd, nxv, nyv, nzv, lamnum, cx, cy, half, half
            )
            if not ok:
                continue
            nsub, axis = _sf_subdivide(kind, view, u, w, hx, pw, t0, t3)
            for sub in range(nsub):
                if nsub == 1:
                    scx, scy, shx, shy = cx, cy, half, half
                elif axis == 0:
                    scx = cx + (sub - 0.5) * half
                    scy = cy
                    shx = 0.5 * half
                    shy = half
                else:
                    scx = cx
                    scy = cy + (sub - 0.5) * half
                    shx = half
                    shy = 0.5 * half
                if nsub > 1:
                    t0, t1, t2, t3, lxy, mag, ok = _sf_transverse(
                        kind, view, src, c0, u, vax, w, sdd, nxv, nyv, nzv, lamnum,
                        scx, scy, shx, shy,
                    )
                    if not ok:
                        continue
                cl = int(math.ceil(t0 / pw + cc - 0.5))
                ch = int(math.floor(t3 / pw + cc + 0.5))
                if cl < 0:
                    cl = 0
                if ch > nc - 1:
                    ch = nc - 1
                if cl > ch:
                    continue
                for col in range(cl, ch + 1):
                    sa = (col - cc) * pw - 0.5 * pw
                    tsbuf[col] = (
                        _trap_cum(t0, t1, t2, t3, sa + pw) - _trap_cum(t0, t1, t2, t3, sa)
                    ) / pw
                for iz in range(nz):
                    cz = z0 + (iz + 0.5) * hz
                    if kind == 0:
                        tcen = (
                            (scx - c0[view, 0]) * vax[view, 0]
                            + (scy - c0[view, 1]) * vax[view, 1]
                            + (cz - c0[view, 2]) * vax[view, 2]
                        )
                    else:
                        tcen = mag * (cz - src[view, 2])
                    te = 0.5 * mag * hz
                    rl = int(math.ceil((tcen - te) / ph + cr - 0.5))
                    rh = int(math.floor((tcen + te) / ph + cr + 0.5))
                    if rl < 0:
                        rl = 0
                    if rh > nr - 1:
                        rh = nr - 1
                    if rl > rh:
                        continue
                    amp = _sf_amplitude(kind, view, src, scx, scy, cz, lxy)
                    s = 0.0
                    for row in range(rl, rh + 1):
                        ta = (row - cr) * ph - 0.5 * ph
                        lo = tcen - te if tcen - te > ta else ta
                        hi = tcen + te if tcen + te < ta + ph else ta + ph
                        if hi <= lo:
                            continue
                        tt = (hi - lo) / ph
                        for col in range(cl, ch + 1):
                            s += tt * tsbuf[col] * y[view, row, col]
                    accs[iz] += amp * s
        for iz in range(nz):
            out[iz, iy, ix] = accs[iz]
