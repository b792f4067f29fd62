"""Geometry types, ray synthesis, modular conversion, and config parsing."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctproj import (
    CONE_CURVED,
    CONE_FLAT,
    MODULAR,
    PARALLEL,
    DetectorSpec,
    Geometry,
    ModularView,
    VolumeSpec,
    parse_config,
    ray_for_sample,
    to_modular,
)
from ctproj.errors import (
    ConflictingKeysError,
    InvalidValueError,
    MissingKeyError,
    UnknownKeyError,
)
from conftest import config_text, make_cone, make_parallel, make_spec


class TestVolumeSpec:
    def test_shape_is_z_y_x(self):
        spec = VolumeSpec(numX=4, numY=5, numZ=6, voxelWidth=1.0, voxelHeight=2.0)
        assert spec.shape == (6, 5, 4)

    def test_center_of_middle_voxel_is_offset(self):
        spec = VolumeSpec(
            numX=5, numY=5, numZ=5, voxelWidth=2.0, voxelHeight=2.0,
            offsetX=1.0, offsetY=-2.0, offsetZ=3.0,
        )
        assert spec.voxel_center(2, 2, 2) == pytest.approx((1.0, -2.0, 3.0))

    def test_rejects_nonpositive_dimensions(self):
        with pytest.raises(Exception):
            VolumeSpec(numX=0, numY=4, numZ=4, voxelWidth=1.0, voxelHeight=1.0)
        with pytest.raises(Exception):
            VolumeSpec(numX=4, numY=4, numZ=4, voxelWidth=-1.0, voxelHeight=1.0)


class TestDetectorSpec:
    def test_default_center_is_geometric_middle(self):
        det = DetectorSpec(numRows=5, numCols=8, pixelHeight=1.0, pixelWidth=1.0)
        assert det.centerRow == 2.0
        assert det.centerCol == 3.5
        assert det.s(3.5) == 0.0
        assert det.t(2) == 0.0

    def test_column_coordinate_spacing(self):
        det = DetectorSpec(numRows=4, numCols=4, pixelHeight=1.0, pixelWidth=0.7)
        assert det.s(2) - det.s(1) == pytest.approx(0.7)


class TestRaySynthesis:
    def test_parallel_ray_direction_is_angle_azimuth(self):
        g = make_parallel(views=4, full=180.0)
        r = ray_for_sample(g, 1, g.detector.numRows // 2, g.detector.numCols // 2)
        phi = math.radians(45.0)
        # parallel rays travel along the view azimuth (+x at 0 degrees)
        assert np.allclose(r.direction, (math.cos(phi), math.sin(phi), 0.0))

    def test_parallel_rays_share_direction_across_detector(self):
        g = make_parallel(views=3)
        d0 = ray_for_sample(g, 2, 0, 0).direction
        d1 = ray_for_sample(g, 2, 5, 11).direction
        assert np.allclose(d0, d1)

    def test_cone_rays_start_at_source(self):
        g = make_cone(views=4, sod=40.0, sdd=80.0)
        r = ray_for_sample(g, 0, 0, 0)
        src = (40.0 * math.cos(0.0), 40.0 * math.sin(0.0), 0.0)
        assert np.allclose(r.origin, src)

    def test_curved_columns_step_by_equal_angles(self):
        # one column off center changes the azimuth by exactly pixelWidth/sdd
        g = make_cone(views=1, curved=True, sod=40.0, sdd=80.0, pitch=1.2)
        cc = g.detector.centerCol
        mid = ray_for_sample(g, 0, 0, int(cc)).direction
        off = ray_for_sample(g, 0, 0, int(cc) + 1).direction
        a0 = math.atan2(mid[1], mid[0])
        a1 = math.atan2(off[1], off[0])
        diff = (a1 - a0 + math.pi) % (2.0 * math.pi) - math.pi
        assert abs(diff) == pytest.approx(1.2 / 80.0, rel=1e-9)

    def test_cone_central_ray_through_origin(self):
        g = Geometry(
            kind=CONE_FLAT,
            detector=DetectorSpec(numRows=3, numCols=3, pixelHeight=1.0, pixelWidth=1.0),
            angles=(0.0,),
            sod=50.0,
            sdd=50.0,
        )
        r = ray_for_sample(g, 0, 1, 1)
        assert np.allclose(r.origin, (50.0, 0.0, 0.0))
        assert np.allclose(r.direction, (-1.0, 0.0, 0.0))

    def test_rotating_all_angles_rotates_all_rays(self):
        delta = 17.0
        g = make_cone(views=3, rows=4, cols=4)
        g2 = Geometry(
            kind=g.kind,
            detector=g.detector,
            angles=tuple(a + delta for a in g.angles),
            sod=g.sod,
            sdd=g.sdd,
        )
        c, s = math.cos(math.radians(delta)), math.sin(math.radians(delta))
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        for view in range(3):
            for row, col in ((0, 0), (2, 3)):
                a = ray_for_sample(g, view, row, col)
                b = ray_for_sample(g2, view, row, col)
                assert np.allclose(rot @ a.origin, b.origin, atol=1e-9)
                assert np.allclose(rot @ a.direction, b.direction, atol=1e-9)

    def test_center_col_shift_moves_s_coordinate(self):
        det = DetectorSpec(numRows=3, numCols=8, pixelHeight=1.0, pixelWidth=0.9)
        det2 = DetectorSpec(
            numRows=3, numCols=8, pixelHeight=1.0, pixelWidth=0.9,
            centerCol=det.centerCol + 1.0,
        )
        cols = np.arange(8)
        assert np.allclose(det2.s(cols), det.s(cols) - 0.9)

    def test_all_rays_are_unit_length(self):
        from ctproj.geometry import all_rays

        for g in (make_parallel(4), make_cone(4), make_cone(4, curved=True)):
            _, dirs = all_rays(g)
            assert np.allclose(np.linalg.norm(dirs, axis=-1), 1.0, atol=1e-9)


class TestToModular:
    def test_cone_flat_views_have_equivalent_rays(self):
        g = make_cone(views=4, rows=6, cols=6, pitch=2.0, sod=40.0, sdd=80.0)
        m = to_modular(g)
        assert m.kind == MODULAR
        assert len(m.modularViews) == 4
        for view in range(4):
            for row in (0, 3, 5):
                for col in (0, 2, 5):
                    a = ray_for_sample(g, view, row, col)
                    b = ray_for_sample(m, view, row, col)
                    assert np.allclose(a.origin, b.origin, atol=1e-9)
                    assert np.allclose(a.direction, b.direction, atol=1e-12)

    def test_non_cone_flat_is_rejected(self):
        from ctproj.errors import UnsupportedGeometryError

        with pytest.raises(UnsupportedGeometryError):
            to_modular(make_parallel(4))


class TestModularView:
    def test_non_unit_direction_rejected(self):
        with pytest.raises(Exception):
            ModularView(
                sourcePos=[0, 0, 0], detectorCenter=[1, 0, 0],
                rowDir=[0, 0, 2.0], colDir=[0, 1, 0],
            )

    def test_non_orthogonal_axes_rejected(self):
        with pytest.raises(Exception):
            ModularView(
                sourcePos=[0, 0, 0], detectorCenter=[1, 0, 0],
                rowDir=[0, 0, 1.0], colDir=[0, 0.8, 0.6],
            )


class TestParseConfig:
    BASE = {
        "geometry": "parallel",
        "numRows": 4, "numCols": 6, "pixelHeight": 1.0, "pixelWidth": 1.0,
        "numX": 8, "numY": 8, "numZ": 4, "voxelWidth": 1.0, "voxelHeight": 1.0,
    }

    def test_equispaced_angles_from_range(self):
        cfg = dict(self.BASE, numAngles=720, angularRange=180)
        g, _ = parse_config(json.dumps(cfg))
        assert g.numViews == 720
        assert g.angles[0] == 0.0
        assert g.angles[1] == pytest.approx(0.25)
        assert g.angles[-1] == pytest.approx(179.75)

    def test_explicit_angle_list(self):
        cfg = dict(self.BASE, angles=[0.0, 10.0, 371.5])
        g, _ = parse_config(json.dumps(cfg))
        assert g.angles == (0.0, 10.0, 371.5)

    def test_unknown_key_is_an_error(self):
        cfg = dict(self.BASE, numAngles=4, angularRange=180, pixelWdith=1.0)
        with pytest.raises(UnknownKeyError, match="pixelWdith"):
            parse_config(json.dumps(cfg))

    def test_range_and_angles_conflict(self):
        cfg = dict(self.BASE, numAngles=4, angularRange=180, angles=[0, 1, 2, 3])
        with pytest.raises(ConflictingKeysError):
            parse_config(json.dumps(cfg))

    def test_missing_required_key(self):
        cfg = {k: v for k, v in self.BASE.items() if k != "numRows"}
        cfg.update(numAngles=4, angularRange=180)
        with pytest.raises(MissingKeyError, match="numRows"):
            parse_config(json.dumps(cfg))

    def test_cone_requires_distances(self):
        cfg = dict(self.BASE, geometry="cone", numAngles=4, angularRange=360)
        with pytest.raises(MissingKeyError):
            parse_config(json.dumps(cfg))

    def test_sdd_only_valid_for_cone(self):
        cfg = dict(self.BASE, numAngles=4, angularRange=180, sod=40.0, sdd=80.0)
        with pytest.raises(UnknownKeyError):
            parse_config(json.dumps(cfg))

    def test_modular_round_trip(self):
        cfg = {
            "geometry": "modular",
            "numRows": 4, "numCols": 4, "pixelHeight": 1.0, "pixelWidth": 1.0,
            "numX": 4, "numY": 4, "numZ": 4, "voxelWidth": 1.0, "voxelHeight": 1.0,
            "views": [
                {
                    "sourcePos": [40.0, 0.0, 0.0],
                    "detectorCenter": [-40.0, 0.0, 0.0],
                    "rowDir": [0.0, 0.0, 1.0],
                    "colDir": [0.0, 1.0, 0.0],
                }
            ],
        }
        g, _ = parse_config(json.dumps(cfg))
        assert g.kind == MODULAR
        assert g.numViews == 1

    def test_invalid_json_is_reported(self):
        with pytest.raises(InvalidValueError):
            parse_config("{not json")

    def test_round_trip_through_dicts(self):
        for g in (make_parallel(5), make_cone(5), make_cone(5, curved=True)):
            spec = make_spec(8, 10.0)
            g2, spec2 = parse_config(config_text(g, spec))
            assert g2 == g
            assert spec2 == spec

    @given(
        n=st.integers(min_value=1, max_value=64),
        rng=st.floats(min_value=1.0, max_value=360.0, allow_nan=False),
    )
    @settings(max_examples=40, deadline=None)
    def test_equispaced_angles_property(self, n, rng):
        cfg = dict(self.BASE, numAngles=n, angularRange=rng)
        g, _ = parse_config(json.dumps(cfg))
        assert g.numViews == n
        steps = np.diff(g.angles)
        if n > 1:
            assert np.allclose(steps, rng / n)
