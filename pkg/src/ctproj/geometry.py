"""Scanner geometries, volume sampling, rays, and configuration parsing.

Coordinate convention (fixed): right-handed axes, rotation axis = z, all
lengths in mm, view angles in degrees externally and radians internally.
For view angle phi:

* parallel ray direction      r(phi) = (cos phi, sin phi, 0)
* detector transverse axis    u(phi) = (-sin phi, cos phi, 0)
* detector axial axis         v      = (0, 0, 1)

Cone beam: the source sits at sod * (cos phi, sin phi, 0) (source azimuth,
not object rotation).  The flat detector plane passes through
-(sdd - sod) * (cos phi, sin phi, 0) with axes (u, v).  The curved detector
is a cylinder of radius sdd centered on the source with axis parallel to z;
its column coordinate is arc length, i.e. equi-angular pixels of angular
pitch pixelWidth / sdd.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConflictingKeysError,
    IndexOutOfRangeError,
    InvalidValueError,
    MissingKeyError,
    UnknownKeyError,
    UnsupportedGeometryError,
)

PARALLEL = "parallel"
CONE_FLAT = "cone-flat"
CONE_CURVED = "cone-curved"
MODULAR = "modular"

_KINDS = (PARALLEL, CONE_FLAT, CONE_CURVED, MODULAR)


@dataclass(frozen=True)
class VolumeSpec:
    """Voxel grid: counts, voxel sizes (mm), and world-space center offset."""

    numX: int
    numY: int
    numZ: int
    voxelWidth: float
    voxelHeight: float
    offsetX: float = 0.0
    offsetY: float = 0.0
    offsetZ: float = 0.0

    def __post_init__(self):
        if min(self.numX, self.numY, self.numZ) < 1:
            raise InvalidValueError("voxel counts must be >= 1")
        if self.voxelWidth <= 0 or self.voxelHeight <= 0:
            raise InvalidValueError("voxel sizes must be > 0")

    @property
    def shape(self):
        """Array shape in [z][y][x] order."""
        return (self.numZ, self.numY, self.numX)

    def voxel_center(self, i, j, k):
        """World coordinates of the center of voxel (i, j, k) = (x, y, z) index."""
        return np.array(
            [
                self.offsetX + (i - (self.numX - 1) / 2.0) * self.voxelWidth,
                self.offsetY + (j - (self.numY - 1) / 2.0) * self.voxelWidth,
                self.offsetZ + (k - (self.numZ - 1) / 2.0) * self.voxelHeight,
            ]
        )

    def bounds(self):
        """(lo, hi) world-space corners of the voxel grid bounding box."""
        half = np.array(
            [
                self.numX * self.voxelWidth / 2.0,
                self.numY * self.voxelWidth / 2.0,
                self.numZ * self.voxelHeight / 2.0,
            ]
        )
        center = np.array([self.offsetX, self.offsetY, self.offsetZ])
        return center - half, center + half

    def circumscribed_radius(self):
        """Distance from the world origin beyond which the grid cannot reach."""
        lo, hi = self.bounds()
        center = (lo + hi) / 2.0
        return float(np.linalg.norm(center) + np.linalg.norm(hi - center))


@dataclass(frozen=True)
class DetectorSpec:
    """Detector pixel grid.  centerRow/centerCol encode the detector shift:
    pixel (r, c) has axial coordinate t = (r - centerRow) * pixelHeight and
    transverse coordinate s = (c - centerCol) * pixelWidth (arc length for
    curved detectors)."""

    numRows: int
    numCols: int
    pixelHeight: float
    pixelWidth: float
    centerRow: float = None  # type: ignore[assignment]
    centerCol: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.numRows < 1 or self.numCols < 1:
            raise InvalidValueError("detector pixel counts must be >= 1")
        if self.pixelHeight <= 0 or self.pixelWidth <= 0:
            raise InvalidValueError("detector pixel sizes must be > 0")
        if self.centerRow is None:
            object.__setattr__(self, "centerRow", (self.numRows - 1) / 2.0)
        if self.centerCol is None:
            object.__setattr__(self, "centerCol", (self.numCols - 1) / 2.0)

    def t(self, row):
        return (row - self.centerRow) * self.pixelHeight

    def s(self, col):
        return (col - self.centerCol) * self.pixelWidth


def _unit(v, tol, what):
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise InvalidValueError(f"{what} must be a unit vector")
    return v


@dataclass(frozen=True)
class ModularView:
    """Explicit source position and detector pose for one view."""

    sourcePos: np.ndarray
    detectorCenter: np.ndarray
    rowDir: np.ndarray
    colDir: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sourcePos", np.asarray(self.sourcePos, dtype=float))
        object.__setattr__(
            self, "detectorCenter", np.asarray(self.detectorCenter, dtype=float)
        )
        object.__setattr__(self, "rowDir", _unit(self.rowDir, 1e-6, "rowDir"))
        object.__setattr__(self, "colDir", _unit(self.colDir, 1e-6, "colDir"))
        if abs(float(np.dot(self.rowDir, self.colDir))) > 1e-6:
            raise InvalidValueError("rowDir and colDir must be orthogonal")


@dataclass(frozen=True)
class Ray:
    """Origin (mm) plus unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise InvalidValueError("ray direction must be unit length")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class Geometry:
    """Tagged union over the supported scanner kinds.

    angles is the per-view angle list in degrees (parallel/cone); modular
    geometries carry explicit per-view poses instead.
    """

    kind: str
    detector: DetectorSpec
    angles: tuple = ()
    sod: float = 0.0
    sdd: float = 0.0
    modularViews: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidValueError(f"unknown geometry kind {self.kind!r}")
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        object.__setattr__(self, "modularViews", tuple(self.modularViews))
        if self.kind == MODULAR:
            if not self.modularViews:
                raise InvalidValueError("modular geometry needs at least one view")
        else:
            if not self.angles:
                raise InvalidValueError("angle list must be non-empty")
            if self.kind in (CONE_FLAT, CONE_CURVED):
                if not (0.0 < self.sod <= self.sdd):
                    raise InvalidValueError("cone geometry requires 0 < sod <= sdd")

    @property
    def numViews(self):
        if self.kind == MODULAR:
            return len(self.modularViews)
        return len(self.angles)

    @property
    def shape(self):
        """Projection array shape in [view][row][col] order."""
        return (self.numViews, self.detector.numRows, self.detector.numCols)

    def with_views(self, indices):
        """Geometry restricted to the given view indices (in order)."""
        indices = list(indices)
        if self.kind == MODULAR:
            return replace(self, modularViews=tuple(self.modularViews[i] for i in indices))
        return replace(self, angles=tuple(self.angles[i] for i in indices))


def _rot_axes(angle_deg):
    phi = math.radians(angle_deg)
    r = np.array([math.cos(phi), math.sin(phi), 0.0])
    u = np.array([-math.sin(phi), math.cos(phi), 0.0])
    v = np.array([0.0, 0.0, 1.0])
    return r, u, v


def pose_table(g: Geometry):
    """Per-view pose arrays consumed by the projector kernels.

    Returns (src, c0, u, vax, w) as float64 arrays of shape (numViews, 3):
    source position (unused for parallel), detector reference point (the
    point at s = t = 0), transverse axis, axial axis, and the central ray
    direction (pointing from source toward the detector).
    """
    n = g.numViews
    src = np.zeros((n, 3))
    c0 = np.zeros((n, 3))
    u = np.zeros((n, 3))
    vax = np.zeros((n, 3))
    w = np.zeros((n, 3))
    if g.kind == MODULAR:
        for i, mv in enumerate(g.modularViews):
            src[i] = mv.sourcePos
            c0[i] = mv.detectorCenter
            u[i] = mv.colDir
            vax[i] = mv.rowDir
            d = mv.detectorCenter - mv.sourcePos
            w[i] = d / np.linalg.norm(d)
        return src, c0, u, vax, w
    for i, a in enumerate(g.angles):
        r, ui, vi = _rot_axes(a)
        u[i] = ui
        vax[i] = vi
        if g.kind == PARALLEL:
            w[i] = r
        else:
            src[i] = g.sod * r
            w[i] = -r
            if g.kind == CONE_FLAT:
                c0[i] = -(g.sdd - g.sod) * r
            else:
                c0[i] = src[i]
    return src, c0, u, vax, w


def ray_for_sample(g: Geometry, view, row, col, back_distance=None):
    """Ray through the center of detector pixel (row, col) of the given view.

    For parallel geometries the origin is placed back_distance behind the
    pixel's point in the through-origin detector plane (default: a generous
    multiple of the detector extent; projectors pass a volume-derived value).
    """
    det = g.detector
    if not (0 <= view < g.numViews and 0 <= row < det.numRows and 0 <= col < det.numCols):
        raise IndexOutOfRangeError(f"sample ({view},{row},{col}) out of range")
    src, c0, u, vax, w = pose_table(g)
    s = det.s(col)
    t = det.t(row)
    if g.kind == PARALLEL:
        if back_distance is None:
            back_distance = 2.0 * (
                det.numCols * det.pixelWidth + det.numRows * det.pixelHeight
            )
        p = c0[view] + s * u[view] + t * vax[view]
        return Ray(p - back_distance * w[view], w[view])
    if g.kind == CONE_CURVED:
        alpha = s / g.sdd
        p = (
            src[view]
            + g.sdd * (math.cos(alpha) * w[view] + math.sin(alpha) * u[view])
            + t * vax[view]
        )
    else:
        p = c0[view] + s * u[view] + t * vax[view]
    d = p - src[view]
    return Ray(src[view], d / np.linalg.norm(d))


def all_rays(g: Geometry, back_distance=None):
    """Vectorized ray_for_sample over every (view, row, col) sample.

    Returns (origins, directions) float64 arrays of shape
    (numViews, numRows, numCols, 3).
    """
    det = g.detector
    src, c0, u, vax, w = pose_table(g)
    s = det.s(np.arange(det.numCols))[None, None, :, None]
    t = det.t(np.arange(det.numRows))[None, :, None, None]
    u4 = u[:, None, None, :]
    v4 = vax[:, None, None, :]
    w4 = w[:, None, None, :]
    if g.kind == PARALLEL:
        if back_distance is None:
            back_distance = 2.0 * (
                det.numCols * det.pixelWidth + det.numRows * det.pixelHeight
            )
        p = c0[:, None, None, :] + s * u4 + t * v4
        origins = p - back_distance * w4
        dirs = np.broadcast_to(w4, origins.shape).copy()
        return origins, dirs
    if g.kind == CONE_CURVED:
        alpha = s / g.sdd
        p = (
            src[:, None, None, :]
            + g.sdd * (np.cos(alpha) * w4 + np.sin(alpha) * u4)
            + t * v4
        )
    else:
        p = c0[:, None, None, :] + s * u4 + t * v4
    d = p - src[:, None, None, :]
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    origins = np.broadcast_to(src[:, None, None, :], d.shape).copy()
    return origins, d


def to_modular(g: Geometry) -> Geometry:
    """Canonicalize a flat-detector cone geometry into per-view poses.

    Parallel beam has no source point and the curved detector is not a
    plane, so neither has an exact modular equivalent.
    """
    if g.kind != CONE_FLAT:
        raise UnsupportedGeometryError(
            f"to_modular supports cone-flat only, got {g.kind}"
        )
    views = []
    for a in g.angles:
        r, u, v = _rot_axes(a)
        views.append(
            ModularView(
                sourcePos=g.sod * r,
                detectorCenter=-(g.sdd - g.sod) * r,
                rowDir=v,
                colDir=u,
            )
        )
    return Geometry(kind=MODULAR, detector=g.detector, modularViews=tuple(views))


# --- configuration files ---------------------------------------------------

_GEOM_NAMES = {
    "parallel": PARALLEL,
    "cone": CONE_FLAT,
    "cone-curved": CONE_CURVED,
    "modular": MODULAR,
}

_COMMON_KEYS = {
    "geometry",
    "numRows",
    "numCols",
    "pixelHeight",
    "pixelWidth",
    "centerRow",
    "centerCol",
    "numX",
    "numY",
    "numZ",
    "voxelWidth",
    "voxelHeight",
    "offsetX",
    "offsetY",
    "offsetZ",
}
_ANGLE_KEYS = {"numAngles", "angularRange", "angles"}
_CONE_KEYS = {"sod", "sdd"}
_MODULAR_KEYS = {"views"}


def _require(cfg, key, kind=None):
    if key not in cfg:
        raise MissingKeyError(f"missing key {key!r}")
    val = cfg[key]
    if kind is int:
        if not isinstance(val, int) or isinstance(val, bool):
            raise InvalidValueError(f"{key} must be an integer")
    elif kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise InvalidValueError(f"{key} must be a number")
        val = float(val)
    return val


def _optional(cfg, key, default):
    val = cfg.get(key, default)
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise InvalidValueError(f"{key} must be a number")
    return float(val)


def _parse_modular_view(obj, index):
    want = {"sourcePos", "detectorCenter", "rowDir", "colDir"}
    if not isinstance(obj, dict):
        raise InvalidValueError(f"views[{index}] must be an object")
    extra = set(obj) - want
    if extra:
        raise UnknownKeyError(f"views[{index}]: unknown key {sorted(extra)[0]!r}")
    missing = want - set(obj)
    if missing:
        raise MissingKeyError(f"views[{index}]: missing key {sorted(missing)[0]!r}")
    vecs = {}
    for k in want:
        v = obj[k]
        if not (isinstance(v, list) and len(v) == 3):
            raise InvalidValueError(f"views[{index}].{k} must be a 3-vector")
        vecs[k] = [float(c) for c in v]
    return ModularView(**vecs)


def parse_config(text: str):
    """Parse a JSON configuration document into (Geometry, VolumeSpec).

    Unknown keys are rejected rather than silently ignored, so typos in a
    configuration file fail loudly.
    """
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidValueError(f"configuration is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise InvalidValueError("configuration must be a JSON object")

    name = _require(cfg, "geometry")
    if name not in _GEOM_NAMES:
        raise InvalidValueError(f"geometry must be one of {sorted(_GEOM_NAMES)}")
    kind = _GEOM_NAMES[name]

    allowed = set(_COMMON_KEYS)
    if kind == MODULAR:
        allowed |= _MODULAR_KEYS
    else:
        allowed |= _ANGLE_KEYS
        if kind in (CONE_FLAT, CONE_CURVED):
            allowed |= _CONE_KEYS
    extra = set(cfg) - allowed
    if extra:
        raise UnknownKeyError(f"unknown key {sorted(extra)[0]!r}")

    det = DetectorSpec(
        numRows=_require(cfg, "numRows", int),
        numCols=_require(cfg, "numCols", int),
        pixelHeight=_require(cfg, "pixelHeight", float),
        pixelWidth=_require(cfg, "pixelWidth", float),
        centerRow=cfg.get("centerRow"),
        centerCol=cfg.get("centerCol"),
    )
    vol = VolumeSpec(
        numX=_require(cfg, "numX", int),
        numY=_require(cfg, "numY", int),
        numZ=_require(cfg, "numZ", int),
        voxelWidth=_require(cfg, "voxelWidth", float),
        voxelHeight=_require(cfg, "voxelHeight", float),
        offsetX=_optional(cfg, "offsetX", 0.0),
        offsetY=_optional(cfg, "offsetY", 0.0),
        offsetZ=_optional(cfg, "offsetZ", 0.0),
    )

    if kind == MODULAR:
        views = cfg.get("views")
        if views is None:
            raise MissingKeyError("missing key 'views'")
        if not isinstance(views, list) or not views:
            raise InvalidValueError("views must be a non-empty array")
        mv = tuple(_parse_modular_view(v, i) for i, v in enumerate(views))
        return Geometry(kind=MODULAR, detector=det, modularViews=mv), vol

    if "angularRange" in cfg and "angles" in cfg:
        raise ConflictingKeysError("give either angularRange or angles, not both")
    if "angles" in cfg:
        angles = cfg["angles"]
        if not isinstance(angles, list) or not angles:
            raise InvalidValueError("angles must be a non-empty array of degrees")
        angles = tuple(float(a) for a in angles)
        if "numAngles" in cfg and cfg["numAngles"] != len(angles):
            raise InvalidValueError("numAngles disagrees with the angles array")
    elif "angularRange" in cfg:
        n = _require(cfg, "numAngles", int)
        if n < 1:
            raise InvalidValueError("numAngles must be >= 1")
        rng = _require(cfg, "angularRange", float)
        if rng <= 0:
            raise InvalidValueError("angularRange must be > 0")
        angles = tuple(rng * i / n for i in range(n))
    else:
        raise MissingKeyError("missing key 'angularRange' or 'angles'")

    kwargs = {}
    if kind in (CONE_FLAT, CONE_CURVED):
        kwargs["sod"] = _require(cfg, "sod", float)
        kwargs["sdd"] = _require(cfg, "sdd", float)
    return Geometry(kind=kind, detector=det, angles=angles, **kwargs), vol


def geometry_to_dict(g: Geometry) -> dict:
    """JSON-serializable description of a geometry (config-file key names)."""
    inv = {v: k for k, v in _GEOM_NAMES.items()}
    d = {
        "geometry": inv[g.kind],
        "numRows": g.detector.numRows,
        "numCols": g.detector.numCols,
        "pixelHeight": g.detector.pixelHeight,
        "pixelWidth": g.detector.pixelWidth,
        "centerRow": g.detector.centerRow,
        "centerCol": g.detector.centerCol,
    }
    if g.kind == MODULAR:
        d["views"] = [
            {
                "sourcePos": list(map(float, mv.sourcePos)),
                "detectorCenter": list(map(float, mv.detectorCenter)),
                "rowDir": list(map(float, mv.rowDir)),
                "colDir": list(map(float, mv.colDir)),
            }
            for mv in g.modularViews
        ]
    else:
        d["angles"] = list(g.angles)
        if g.kind in (CONE_FLAT, CONE_CURVED):
            d["sod"] = g.sod
            d["sdd"] = g.sdd
    return d


def volume_spec_to_dict(spec: VolumeSpec) -> dict:
    return {
        "numX": spec.numX,
        "numY": spec.numY,
        "numZ": spec.numZ,
        "voxelWidth": spec.voxelWidth,
        "voxelHeight": spec.voxelHeight,
        "offsetX": spec.offsetX,
        "offsetY": spec.offsetY,
        "offsetZ": spec.offsetZ,
    }


def geometry_from_dict(d: dict) -> Geometry:
    """Inverse of geometry_to_dict (always uses an explicit angle list)."""
    kind = _GEOM_NAMES[d["geometry"]]
    det = DetectorSpec(
        numRows=d["numRows"],
        numCols=d["numCols"],
        pixelHeight=d["pixelHeight"],
        pixelWidth=d["pixelWidth"],
        centerRow=d.get("centerRow"),
        centerCol=d.get("centerCol"),
    )
    if kind == MODULAR:
        mv = tuple(_parse_modular_view(v, i) for i, v in enumerate(d["views"]))
        return Geometry(kind=kind, detector=det, modularViews=mv)
    kwargs = {}
    if kind in (CONE_FLAT, CONE_CURVED):
        kwargs["sod"] = d["sod"]
        kwargs["sdd"] = d["sdd"]
    return Geometry(kind=kind, detector=det, angles=tuple(d["angles"]), **kwargs)


def volume_spec_from_dict(d: dict) -> VolumeSpec:
    return VolumeSpec(
        numX=d["numX"],
        numY=d["numY"],
        numZ=d["numZ"],
        voxelWidth=d["voxelWidth"],
        voxelHeight=d["voxelHeight"],
        offsetX=d.get("offsetX", 0.0),
        offsetY=d.get("offsetY", 0.0),
        offsetZ=d.get("offsetZ", 0.0),
    )
