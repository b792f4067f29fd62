"""Shared fixtures: small geometries and config builders used across tests."""

import json
import sys

import numpy as np
import pytest

from ctproj import (
    CONE_CURVED,
    CONE_FLAT,
    PARALLEL,
    DetectorSpec,
    Geometry,
    ProjectionSet,
    Volume,
    VolumeSpec,
)


def make_spec(n=16, extent=24.0, nz=None):
    """Cubic-footprint volume spec of n x n x nz voxels spanning `extent` mm."""
    h = extent / n
    return VolumeSpec(numX=n, numY=n, numZ=nz or n, voxelWidth=h, voxelHeight=h)


def make_detector(rows=24, cols=24, pitch=1.0):
    return DetectorSpec(numRows=rows, numCols=cols, pixelHeight=pitch, pixelWidth=pitch)


def make_parallel(views=12, rows=24, cols=24, pitch=1.0, full=180.0):
    return Geometry(
        kind=PARALLEL,
        detector=make_detector(rows, cols, pitch),
        angles=tuple(full * i / views for i in range(views)),
    )


def make_cone(views=12, rows=24, cols=24, pitch=1.5, sod=40.0, sdd=80.0, curved=False):
    return Geometry(
        kind=CONE_CURVED if curved else CONE_FLAT,
        detector=make_detector(rows, cols, pitch),
        angles=tuple(360.0 * i / views for i in range(views)),
        sod=sod,
        sdd=sdd,
    )


def random_volume(spec, seed=0):
    rng = np.random.default_rng(seed)
    return Volume(spec, rng.random(spec.shape, dtype=np.float32))


def random_projections(g, seed=1):
    rng = np.random.default_rng(seed)
    return ProjectionSet(g, rng.random(g.shape, dtype=np.float32))


def config_text(g, spec):
    """Config JSON for a geometry/volume pair in the file-format key names."""
    from ctproj.geometry import geometry_to_dict, volume_spec_to_dict

    d = geometry_to_dict(g)
    d.update(volume_spec_to_dict(spec))
    return json.dumps(d)


@pytest.fixture
def parallel_small():
    return make_parallel(views=8, rows=16, cols=16, pitch=1.25), make_spec(12, 15.0)


@pytest.fixture
def cone_small():
    return make_cone(views=8, rows=16, cols=16, pitch=2.0), make_spec(12, 15.0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Re-emit acceptance verdict lines in the summary; plain prints from the
    tests are swallowed by output capture."""
    if getattr(config, "_verdicts_emitted", False):
        return
    config._verdicts_emitted = True
    lines = []
    for mod in list(sys.modules.values()):
        found = getattr(mod, "VERDICT_LINES", None)
        if not isinstance(found, list):
            continue
        for line in found:
            if line not in lines:
                lines.append(line)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
