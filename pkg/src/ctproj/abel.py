"""Matched projector pair for cylindrically symmetric objects under
parallel rays (discrete Abel transform).

The object is a stack of axial slices, each a radial profile sampled at
r_i = (i + 0.5) * radialSpacing.  The forward weight of radial bin i at
detector offset s is the exact chord length of the annulus
[r_i - h/2, r_i + h/2] along the line at that offset, so a single-annulus
profile projects to the analytic two-term chord formula exactly.  The
backprojector reuses the same weight matrix, making the pair matched by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import ProjectionSet, Volume
from .errors import SpecMismatchError
from .geometry import PARALLEL, DetectorSpec, Geometry, VolumeSpec


@dataclass(frozen=True)
class RadialProfile:
    """Per-slice radial attenuation samples (numZ x numR, mm^-1)."""

    radialSpacing: float
    values: np.ndarray

    def __post_init__(self):
        if self.radialSpacing <= 0:
            raise SpecMismatchError("radialSpacing must be > 0")
        vals = np.ascontiguousarray(self.values, dtype=np.float32)
        if vals.ndim != 2:
            raise SpecMismatchError("radial profile must be (numZ, numR)")
        if not np.all(np.isfinite(vals)):
            raise SpecMismatchError("radial profile must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def numR(self):
        return self.values.shape[1]

    @property
    def numZ(self):
        return self.values.shape[0]

    def radii(self):
        return (np.arange(self.numR) + 0.5) * self.radialSpacing


def annulus_chord_weights(num_r: int, spacing: float, det: DetectorSpec) -> np.ndarray:
    """(numR, numCols) matrix of annulus chord lengths per detector offset."""
    s = det.s(np.arange(det.numCols))[None, :]
    r_in = (np.arange(num_r) * spacing)[:, None]
    r_out = r_in + spacing
    return 2.0 * (
        np.sqrt(np.maximum(r_out**2 - s**2, 0.0))
        - np.sqrt(np.maximum(r_in**2 - s**2, 0.0))
    )


def abel_forward(f: RadialProfile, det: DetectorSpec) -> ProjectionSet:
    """Project each axial slice; returns a single parallel-beam view with
    one detector row per slice."""
    if det.numRows != f.numZ:
        raise SpecMismatchError(
            f"detector has {det.numRows} rows for {f.numZ} axial slices"
        )
    w = annulus_chord_weights(f.numR, f.radialSpacing, det)
    vals = f.values.astype(np.float64) @ w
    return ProjectionSet(
        Geometry(kind=PARALLEL, detector=det, angles=(0.0,)),
        vals[None, :, :].astype(np.float32),
    )


def abel_backproject(p: ProjectionSet, num_r: int, radial_spacing: float) -> RadialProfile:
    """Exact transpose of abel_forward with the same chord weights."""
    g = p.geometry
    if g.kind != PARALLEL or g.numViews != 1:
        raise SpecMismatchError("expected a single parallel-beam view")
    w = annulus_chord_weights(num_r, radial_spacing, g.detector)
    vals = p.values[0].astype(np.float64) @ w.T
    return RadialProfile(radial_spacing, vals.astype(np.float32))


def revolve(f: RadialProfile, spec: VolumeSpec) -> Volume:
    """Sweep the radial profile around the z axis into a voxel volume
    (piecewise-constant per annulus), for cross-checks against the 3D path."""
    if spec.numZ != f.numZ:
        raise SpecMismatchError("volume numZ must match the profile's slice count")
    xs = spec.offsetX + (np.arange(spec.numX) - (spec.numX - 1) / 2.0) * spec.voxelWidth
    ys = spec.offsetY + (np.arange(spec.numY) - (spec.numY - 1) / 2.0) * spec.voxelWidth
    r = np.hypot(xs[None, :], ys[:, None])
    idx = np.floor(r / f.radialSpacing).astype(int)
    ok = idx < f.numR
    idx = np.clip(idx, 0, f.numR - 1)
    vals = f.values[:, idx] * ok[None, :, :]
    return Volume(spec, vals.astype(np.float32))


def profile_to_volume_file_shape(f: RadialProfile) -> Volume:
    """RadialProfile in the raw+header container convention: a volume of
    shape [numZ, 1, numR] with voxelWidth = radialSpacing."""
    spec = VolumeSpec(
        numX=f.numR,
        numY=1,
        numZ=f.numZ,
        voxelWidth=f.radialSpacing,
        voxelHeight=f.radialSpacing,
    )
    return Volume(spec, f.values[:, None, :])
