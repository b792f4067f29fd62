"""Autodiff-binding tests: config loading, zero-copy interchange, VJP wiring,
and equivalence with the command-line pipeline."""

import json

import numpy as np
import pytest
import torch

from ctproj import (
    ProjectionSet,
    ProjectorPair,
    SIDDON,
    Volume,
    read_array,
    write_array,
)
from ctproj.cli import main as cli_main
from ctproj.errors import UnknownKeyError
from ctproj.geometry import geometry_to_dict, volume_spec_to_dict
from ctproj_torch import NonContiguousError, Projector, ShapeMismatchError, load_param


def make_config(tmp_path, views=8, n=12, rows=16, cols=16):
    from ctproj import DetectorSpec, Geometry, PARALLEL, VolumeSpec

    spec = VolumeSpec(numX=n, numY=n, numZ=n, voxelWidth=15.0 / n,
                      voxelHeight=15.0 / n)
    det = DetectorSpec(numRows=rows, numCols=cols, pixelHeight=1.25, pixelWidth=1.25)
    g = Geometry(kind=PARALLEL, detector=det,
                 angles=tuple(180.0 * i / views for i in range(views)))
    d = geometry_to_dict(g)
    d.update(volume_spec_to_dict(spec))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(d))
    return cfg, g, spec


@pytest.fixture
def bound(tmp_path):
    cfg, g, spec = make_config(tmp_path)
    return load_param(cfg), cfg, g, spec, tmp_path


class TestLoadParam:
    def test_valid_config_is_usable(self, bound):
        proj, cfg, g, spec, tmp = bound
        assert proj.volume_shape == spec.shape
        assert proj.projection_shape == g.shape

    def test_bad_key_names_the_key(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"geometry": "parallel", "numAngels": 4}))
        with pytest.raises(UnknownKeyError, match="numAngels"):
            load_param(cfg)

    def test_unbound_module_raises(self):
        with pytest.raises(ShapeMismatchError):
            Projector()(torch.zeros(1, 2, 2, 2))


class TestForward:
    def test_matches_native_projector(self, bound):
        proj, cfg, g, spec, tmp = bound
        x = torch.rand(1, *spec.shape)
        want = ProjectorPair(SIDDON, g, spec).apply(
            Volume(spec, x[0].numpy())
        ).values
        got = proj(x)
        assert got.shape == (1, *g.shape)
        assert got[0].numpy().tobytes() == want.tobytes()

    def test_zero_input_zero_output_zero_grad(self, bound):
        proj, cfg, g, spec, tmp = bound
        x = torch.zeros(1, *spec.shape, requires_grad=True)
        y = proj(x)
        assert torch.all(y == 0)
        (0.5 * (y**2).sum()).backward()
        assert torch.all(x.grad == 0)

    def test_shape_mismatch(self, bound):
        proj, *_ = bound
        with pytest.raises(ShapeMismatchError):
            proj(torch.zeros(1, 3, 3, 3))
        with pytest.raises(ShapeMismatchError):
            proj(torch.zeros(1, *proj.volume_shape, dtype=torch.float64))

    def test_batch_size_contract(self, bound):
        proj, *_ = bound
        with pytest.raises(ShapeMismatchError):
            proj(torch.zeros(2, *proj.volume_shape))

    def test_non_contiguous_rejected(self, bound):
        proj, cfg, g, spec, tmp = bound
        n = spec.numX
        big = torch.rand(1, n, n, 2 * n)
        view = big[..., ::2]
        assert not view.is_contiguous()
        with pytest.raises(NonContiguousError):
            proj(view)

    def test_zero_copy_interchange(self, bound):
        # the tensor's storage is handed to the native layer without copying
        proj, cfg, g, spec, tmp = bound
        x = torch.rand(1, *spec.shape)
        arr = x.detach().numpy()
        assert arr.__array_interface__["data"][0] == x.data_ptr()
        # and the output tensor shares memory with the native result array
        y = proj(x)
        back = y.numpy()
        assert back.__array_interface__["data"][0] == y.data_ptr()


class TestBackward:
    def test_backward_is_native_adjoint_bitwise(self, bound):
        proj, cfg, g, spec, tmp = bound
        x = torch.rand(1, *spec.shape, requires_grad=True)
        ybar = torch.rand(1, *g.shape)
        y = proj(x)
        y.backward(ybar)
        want = ProjectorPair(SIDDON, g, spec).apply_adjoint(
            ProjectionSet(g, ybar[0].numpy())
        ).values
        assert x.grad[0].numpy().tobytes() == want.tobytes()

    def test_least_squares_gradient_equals_native(self, bound):
        proj, cfg, g, spec, tmp = bound
        P = ProjectorPair(SIDDON, g, spec)
        x = torch.rand(1, *spec.shape, requires_grad=True)
        target = torch.rand(1, *g.shape)
        loss = 0.5 * ((proj(x) - target) ** 2).sum()
        loss.backward()
        r = P.apply(Volume(spec, x.detach()[0].numpy())).values - target[0].numpy()
        want = P.apply_adjoint(ProjectionSet(g, r)).values.astype(np.float64)
        got = x.grad[0].numpy().astype(np.float64)
        denom = max(float(np.abs(want).max()), 1e-12)
        assert float(np.abs(got - want).max()) / denom < 1e-5

    def test_backproject_direction(self, bound):
        proj, cfg, g, spec, tmp = bound
        y = torch.rand(1, *g.shape, requires_grad=True)
        x = proj.backproject(y)
        xbar = torch.rand(1, *spec.shape)
        x.backward(xbar)
        want = ProjectorPair(SIDDON, g, spec).apply(
            Volume(spec, xbar[0].numpy())
        ).values
        assert y.grad[0].numpy().tobytes() == want.tobytes()


class TestCliEquivalence:
    def test_forward_bitwise_equals_cli(self, bound):
        proj, cfg, g, spec, tmp = bound
        rng = np.random.default_rng(0)
        vol = Volume(spec, rng.random(spec.shape, dtype=np.float32))
        vol_file = tmp / "vol.json"
        out_file = tmp / "proj.json"
        write_array(vol, vol_file)
        assert cli_main(["project", "--config", str(cfg), "--in", str(vol_file),
                         "--out", str(out_file)]) == 0
        cli_y = read_array(out_file).values
        y = proj(torch.from_numpy(vol.values.copy()).unsqueeze(0))
        assert y[0].numpy().tobytes() == cli_y.tobytes()


class TestTrainingLoop:
    def test_fifty_step_descent_decreases_loss(self, bound):
        proj, cfg, g, spec, tmp = bound
        rng = np.random.default_rng(1)
        truth = torch.from_numpy(rng.random(spec.shape, dtype=np.float32)).unsqueeze(0)
        with torch.no_grad():
            target = proj(truth)
        x = torch.zeros(1, *spec.shape, requires_grad=True)
        opt = torch.optim.SGD([x], lr=1e-3)
        losses = []
        for _ in range(50):
            opt.zero_grad()
            loss = 0.5 * ((proj(x) - target) ** 2).sum()
            loss.backward()
            opt.step()
            losses.append(loss.item())
        assert losses[-1] < losses[0]
        drops = sum(1 for a, b in zip(losses, losses[1:]) if b < a)
        assert drops >= 45  # overwhelmingly decreasing, not just endpoint luck
