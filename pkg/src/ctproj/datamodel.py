"""Volume and projection containers plus raw+header file I/O.

Arrays are contiguous 32-bit floats: volumes in [z][y][x] order (mm^-1),
projections in [view][row][col] order (dimensionless line integrals).
Files are a JSON header next to a raw little-endian float32 blob.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidValueError,
    LengthMismatchError,
    MalformedHeaderError,
    NonFiniteDataError,
    SizeMismatchError,
    SpecMismatchError,
)
from .geometry import (
    Geometry,
    VolumeSpec,
    geometry_from_dict,
    geometry_to_dict,
    volume_spec_from_dict,
    volume_spec_to_dict,
)


def _as_f32(values, shape, what):
    arr = np.ascontiguousarray(values, dtype=np.float32)
    if arr.size != int(np.prod(shape)):
        raise SizeMismatchError(
            f"{what}: got {arr.size} values, spec implies {int(np.prod(shape))}"
        )
    arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteDataError(f"{what}: values must be finite")
    return arr


@dataclass(frozen=True)
class Volume:
    """Voxelized attenuation map (mm^-1)."""

    spec: VolumeSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _as_f32(self.values, self.spec.shape, "volume")
        )

    @classmethod
    def zeros(cls, spec: VolumeSpec) -> "Volume":
        return cls(spec, np.zeros(spec.shape, dtype=np.float32))


@dataclass(frozen=True)
class ProjectionSet:
    """Stack of detector measurements over all views (the sinogram)."""

    geometry: Geometry
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _as_f32(self.values, self.geometry.shape, "projections")
        )

    @classmethod
    def zeros(cls, geometry: Geometry) -> "ProjectionSet":
        return cls(geometry, np.zeros(geometry.shape, dtype=np.float32))


@dataclass(frozen=True)
class AngleMask:
    """Per-view keep flags; at least one view must survive."""

    keep: np.ndarray

    def __post_init__(self):
        keep = np.asarray(self.keep, dtype=bool).ravel()
        if keep.size == 0 or not keep.any():
            raise InvalidValueError("mask must keep at least one view")
        object.__setattr__(self, "keep", keep)

    @property
    def kept_indices(self):
        return np.flatnonzero(self.keep)


def apply_mask(y: ProjectionSet, m: AngleMask) -> ProjectionSet:
    """Restrict a projection set to the kept views (angles filtered too)."""
    if m.keep.size != y.geometry.numViews:
        raise LengthMismatchError(
            f"mask has {m.keep.size} entries for {y.geometry.numViews} views"
        )
    idx = m.kept_indices
    return ProjectionSet(y.geometry.with_views(idx), y.values[idx])


def write_array(obj, header_path) -> None:
    """Write a Volume or ProjectionSet as JSON header + raw f32le blob.

    Written atomically (temp file + rename) so a failed write never leaves
    a partial file at the destination.
    """
    header_path = os.fspath(header_path)
    base = os.path.splitext(os.path.basename(header_path))[0]
    raw_name = base + ".raw"
    raw_path = os.path.join(os.path.dirname(header_path) or ".", raw_name)
    if isinstance(obj, Volume):
        header = {
            "kind": "volume",
            "shape": list(obj.spec.shape),
            "dtype": "f32le",
            "raw": raw_name,
            "volume": volume_spec_to_dict(obj.spec),
        }
    elif isinstance(obj, ProjectionSet):
        header = {
            "kind": "projections",
            "shape": list(obj.geometry.shape),
            "dtype": "f32le",
            "raw": raw_name,
            "geometry": geometry_to_dict(obj.geometry),
        }
    else:
        raise SpecMismatchError(f"cannot serialize {type(obj).__name__}")
    payload = np.ascontiguousarray(obj.values, dtype="<f4").tobytes()
    for path, data, mode in (
        (raw_path, payload, "wb"),
        (header_path, json.dumps(header, indent=2).encode(), "wb"),
    ):
        tmp = path + ".tmp"
        with open(tmp, mode) as f:
            f.write(data)
        os.replace(tmp, path)


def read_array(header_path):
    """Read a Volume or ProjectionSet written by write_array."""
    header_path = os.fspath(header_path)
    try:
        with open(header_path, "rb") as f:
            header = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise MalformedHeaderError(f"cannot read header {header_path}: {e}") from e
    try:
        kind = header["kind"]
        shape = tuple(int(n) for n in header["shape"])
        dtype = header["dtype"]
        raw = header["raw"]
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedHeaderError(f"bad header {header_path}: {e}") from e
    if dtype != "f32le":
        raise MalformedHeaderError(f"unsupported dtype {dtype!r}")
    if kind not in ("volume", "projections"):
        raise MalformedHeaderError(f"unsupported kind {kind!r}")
    raw_path = os.path.join(os.path.dirname(header_path) or ".", raw)
    expected = int(np.prod(shape)) * 4
    try:
        actual = os.path.getsize(raw_path)
    except OSError as e:
        raise MalformedHeaderError(f"raw file missing: {raw_path}") from e
    if actual != expected:
        raise SizeMismatchError(
            f"{raw_path}: {actual} bytes, header declares {expected}"
        )
    values = np.fromfile(raw_path, dtype="<f4").reshape(shape)
    if not np.all(np.isfinite(values)):
        raise NonFiniteDataError(f"{raw_path}: non-finite values")
    if kind == "volume":
        try:
            spec = volume_spec_from_dict(header["volume"])
        except (KeyError, TypeError) as e:
            raise MalformedHeaderError(f"bad volume spec in {header_path}") from e
        if spec.shape != shape:
            raise MalformedHeaderError("header shape disagrees with volume spec")
        return Volume(spec, values)
    try:
        g = geometry_from_dict(header["geometry"])
    except (KeyError, TypeError) as e:
        raise MalformedHeaderError(f"bad geometry in {header_path}") from e
    if g.shape != shape:
        raise MalformedHeaderError("header shape disagrees with geometry")
    return ProjectionSet(g, values)
