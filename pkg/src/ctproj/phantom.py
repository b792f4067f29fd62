"""Analytic ellipsoid phantoms: rasterization and closed-form line
integrals, used as the independent accuracy oracle for the projectors."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .datamodel import ProjectionSet, Volume
from .errors import InvalidValueError
from .geometry import Geometry, VolumeSpec, all_rays


@dataclass(frozen=True)
class Ellipsoid:
    """Axis-aligned ellipsoid rotated about z, with additive density."""

    center: tuple
    semiAxes: tuple
    rotationZ: float = 0.0
    density: float = 1.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        a = tuple(float(v) for v in self.semiAxes)
        if len(c) != 3 or len(a) != 3:
            raise InvalidValueError("center and semiAxes must be 3-vectors")
        if min(a) <= 0:
            raise InvalidValueError("semi-axes must be positive")
        if not all(map(math.isfinite, c + a + (self.rotationZ, self.density))):
            raise InvalidValueError("ellipsoid parameters must be finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "semiAxes", a)


EllipsoidPhantom = tuple  # tuple[Ellipsoid, ...]

# 3-ellipsoid phantom used throughout the tests and demos; fits in a
# 10 mm radius ball around the origin.
DESK_PHANTOM = (
    Ellipsoid(center=(0.0, 0.0, 0.0), semiAxes=(8.0, 9.0, 7.5), density=0.02),
    Ellipsoid(center=(3.0, 2.0, 1.0), semiAxes=(2.5, 1.5, 2.0), rotationZ=30.0, density=0.01),
    Ellipsoid(center=(-3.0, -2.5, -1.0), semiAxes=(1.5, 2.5, 2.0), rotationZ=-20.0, density=-0.005),
)


def _world_to_ellipsoid(e: Ellipsoid):
    """Rotation taking world xy onto the ellipsoid's principal axes."""
    phi = math.radians(e.rotationZ)
    c, s = math.cos(phi), math.sin(phi)
    # rows are the ellipsoid axes expressed in world coordinates
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def rasterize(ph, spec: VolumeSpec, supersample: int = 1) -> Volume:
    """Voxelize: density weighted by the inside fraction of supersample^3
    subpoints per voxel."""
    if supersample < 1:
        raise InvalidValueError("supersample must be >= 1")
    ss = supersample
    nx, ny, nz = spec.numX, spec.numY, spec.numZ
    sub = (np.arange(ss) + 0.5) / ss - 0.5
    xs = spec.offsetX + (np.arange(nx)[:, None] - (nx - 1) / 2.0) * spec.voxelWidth
    xs = (xs + sub[None, :] * spec.voxelWidth).ravel()
    ys = spec.offsetY + (np.arange(ny)[:, None] - (ny - 1) / 2.0) * spec.voxelWidth
    ys = (ys + sub[None, :] * spec.voxelWidth).ravel()
    zs = spec.offsetZ + (np.arange(nz)[:, None] - (nz - 1) / 2.0) * spec.voxelHeight
    zs = (zs + sub[None, :] * spec.voxelHeight).ravel()
    vals = np.zeros((nz, ny, nx), dtype=np.float64)
    for e in ph:
        rot = _world_to_ellipsoid(e)
        ax = np.asarray(e.semiAxes)
        # rotation is about z only, so the xy part is shared by all slices
        px = (xs - e.center[0])[None, :]
        py = (ys - e.center[1])[:, None]
        qx = (rot[0, 0] * px + rot[0, 1] * py) / ax[0]
        qy = (rot[1, 0] * px + rot[1, 1] * py) / ax[1]
        r2_xy = qx * qx + qy * qy
        qz2 = ((zs - e.center[2]) / ax[2]) ** 2
        for zi in range(nz):
            sub2 = qz2[zi * ss : (zi + 1) * ss]
            inside = r2_xy[None, :, :] + sub2[:, None, None] <= 1.0
            frac = inside.reshape(ss, ny, ss, nx, ss).mean(axis=(0, 2, 4))
            vals[zi] += e.density * frac
    return Volume(spec, vals.astype(np.float32))


def _chords(origins, dirs, e: Ellipsoid):
    """Ray-ellipsoid chord lengths for unit-direction rays (vectorized)."""
    rot = _world_to_ellipsoid(e)
    ax = np.asarray(e.semiAxes)
    o = (origins - np.asarray(e.center)) @ rot.T / ax
    d = dirs @ rot.T / ax
    a = np.einsum("...i,...i->...", d, d)
    b = np.einsum("...i,...i->...", o, d)
    c = np.einsum("...i,...i->...", o, o) - 1.0
    disc = b * b - a * c
    return np.sqrt(np.maximum(disc, 0.0)) * 2.0 / a


def analytic_project(ph, g: Geometry) -> ProjectionSet:
    """Exact line integrals through the phantom along every sample ray."""
    origins, dirs = all_rays(g)
    vals = np.zeros(g.shape)
    for e in ph:
        vals += e.density * _chords(origins, dirs, e)
    return ProjectionSet(g, vals.astype(np.float32))


def chord_lengths(ph, g: Geometry) -> np.ndarray:
    """Per-sample geometric chord length through the union support (sum of
    per-ellipsoid chords, density-free); used to select well-hit rays."""
    origins, dirs = all_rays(g)
    total = np.zeros(g.shape)
    for e in ph:
        total += _chords(origins, dirs, e)
    return total


def load_phantom(text: str):
    """Parse the JSON phantom format: an array of ellipsoid objects."""
    data = json.loads(text)
    if not isinstance(data, list):
        raise InvalidValueError("phantom file must be a JSON array")
    out = []
    for i, obj in enumerate(data):
        if not isinstance(obj, dict):
            raise InvalidValueError(f"phantom[{i}] must be an object")
        extra = set(obj) - {"center", "semiAxes", "rotationZ", "density"}
        if extra:
            raise InvalidValueError(f"phantom[{i}]: unknown key {sorted(extra)[0]!r}")
        out.append(
            Ellipsoid(
                center=obj["center"],
                semiAxes=obj["semiAxes"],
                rotationZ=obj.get("rotationZ", 0.0),
                density=obj.get("density", 1.0),
            )
        )
    return tuple(out)


def dump_phantom(ph) -> str:
    return json.dumps(
        [
            {
                "center": list(e.center),
                "semiAxes": list(e.semiAxes),
                "rotationZ": e.rotationZ,
                "density": e.density,
            }
            for e in ph
        ],
        indent=2,
    )
