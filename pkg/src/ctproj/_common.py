"""Shared glue between geometry objects and the numba kernels."""

from .geometry import CONE_CURVED, CONE_FLAT, MODULAR, PARALLEL, pose_table

KIND_CODE = {PARALLEL: 0, CONE_FLAT: 1, CONE_CURVED: 2, MODULAR: 3}


def kernel_geom(g, spec):
    """Flatten a (Geometry, VolumeSpec) pair into kernel arguments.

    Returns (kind, src, c0, u, vax, w, pw, ph, cr, cc, sdd, back,
    x0, y0, z0, hx, hz).  `back` places parallel-beam ray origins one
    circumscribed radius plus a voxel behind the detector plane, so the
    whole volume always lies in front of the origin.
    """
    src, c0, u, vax, w = pose_table(g)
    det = g.detector
    lo, _ = spec.bounds()
    back = spec.circumscribed_radius() + spec.voxelWidth
    sdd = g.sdd if g.kind in (CONE_FLAT, CONE_CURVED) else 1.0
    return (
        KIND_CODE[g.kind],
        src,
        c0,
        u,
        vax,
        w,
        det.pixelWidth,
        det.pixelHeight,
        det.centerRow,
        det.centerCol,
        sdd,
        back,
        lo[0],
        lo[1],
        lo[2],
        spec.voxelWidth,
        spec.voxelHeight,
    )
