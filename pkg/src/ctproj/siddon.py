"""Ray-driven exact line-length projector pair (Siddon traversal).

The forward operator integrates each detector pixel's center ray through
the voxel grid; the backprojector is the exact transpose, gathering the
same ray-voxel intersection lengths voxel-side.
"""

from __future__ import annotations

import numpy as np

from ._common import kernel_geom
from ._kernels import siddon_back_kernel, siddon_forward_kernel
from .datamodel import ProjectionSet, Volume
from .geometry import Geometry, VolumeSpec


def siddon_forward(x: Volume, g: Geometry) -> ProjectionSet:
    """Forward project: y[sample] = sum over hit voxels of length * value."""
    args = kernel_geom(g, x.spec)
    out = np.empty(g.shape, dtype=np.float32)
    siddon_forward_kernel(x.values, out, *args)
    return ProjectionSet(g, out)


def siddon_backproject(y: ProjectionSet, spec: VolumeSpec) -> Volume:
    """Matched transpose of siddon_forward for the same geometry."""
    args = kernel_geom(y.geometry, spec)
    out = np.empty(spec.shape, dtype=np.float32)
    siddon_back_kernel(y.values, out, *args)
    return Volume(spec, out)
