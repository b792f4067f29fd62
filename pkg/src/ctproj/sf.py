"""Separable-footprint projector pair (trapezoid transverse, rectangle
axial) for parallel and cone geometries.

Each voxel's detector footprint is the product of a transverse trapezoid
(breakpoints = projections of the voxel's four vertical edges) and an
axial rectangle, integrated in closed form against the finite pixel
extent.  The amplitude is the maximum transverse chord over the cosine of
the axial ray tilt.  Footprints wider than 8 columns are handled by
splitting the voxel transversely in two.
"""

from __future__ import annotations

import numpy as np

from ._common import kernel_geom
from ._kernels import sf_back_kernel, sf_forward_kernel
from .datamodel import ProjectionSet, Volume
from .errors import UnsupportedGeometryError
from .geometry import MODULAR, Geometry, VolumeSpec


def _check_kind(g: Geometry):
    if g.kind == MODULAR:
        raise UnsupportedGeometryError(
            "separable-footprint projector does not support modular geometry"
        )


def sf_forward(x: Volume, g: Geometry) -> ProjectionSet:
    """Forward project with finite voxel and detector-pixel extent."""
    _check_kind(g)
    args = kernel_geom(g, x.spec)
    out = np.empty(g.shape, dtype=np.float32)
    sf_forward_kernel(x.values, out, *args[:11], *args[12:])
    return ProjectionSet(g, out)


def sf_backproject(y: ProjectionSet, spec: VolumeSpec) -> Volume:
    """Exact transpose of sf_forward (same footprint coefficients)."""
    _check_kind(y.geometry)
    args = kernel_geom(y.geometry, spec)
    out = np.empty(spec.shape, dtype=np.float32)
    sf_back_kernel(y.values, out, *args[:11], *args[12:])
    return Volume(spec, out)
