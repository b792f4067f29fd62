"""
Using the projector inside a torch training loop
================================================

The companion package ``ctproj-torch`` (in bindings/) wraps the matched
projector pair as a ``torch.nn.Module``.  Forward is the native forward
projector; ``backward`` is the native backprojector, which is the exact
transpose, so autograd gradients are correct to the last bit -- no
unmatched-adjoint bias creeps into training.

Install it first:  pip install -e bindings/ --no-build-isolation
"""

import json
import tempfile
from pathlib import Path

import numpy as np
import torch

from ctproj import DetectorSpec, Geometry, PARALLEL, VolumeSpec
from ctproj.geometry import geometry_to_dict, volume_spec_to_dict
from ctproj_torch import load_param

# The binding is configured from the same JSON files the CLI uses.
n, views = 16, 24
spec = VolumeSpec(numX=n, numY=n, numZ=n, voxelWidth=20.0 / n, voxelHeight=20.0 / n)
det = DetectorSpec(numRows=24, numCols=24, pixelHeight=1.25, pixelWidth=1.25)
g = Geometry(kind=PARALLEL, detector=det,
             angles=tuple(180.0 * i / views for i in range(views)))
cfg = {**geometry_to_dict(g), **volume_spec_to_dict(spec)}
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "scanner.json"
    path.write_text(json.dumps(cfg))
    proj = load_param(path)

# Simulate a measured sinogram from a hidden volume.
rng = np.random.default_rng(7)
hidden = torch.from_numpy(rng.random(spec.shape, dtype=np.float32)).unsqueeze(0)
with torch.no_grad():
    measured = proj(hidden)

# Reconstruct by optimizing the volume directly with Adam.  Any torch
# loss and any torch optimizer slots in; the projector is just a layer.
x = torch.zeros(1, *spec.shape, requires_grad=True)
opt = torch.optim.Adam([x], lr=5e-3)
for step in range(201):
    opt.zero_grad()
    loss = 0.5 * ((proj(x) - measured) ** 2).sum()
    loss.backward()
    opt.step()
    if step % 50 == 0:
        print(f"step {step:3d}  data loss {loss.item():.4e}")

err = (x.detach()[0] - hidden[0]).abs().max()
print(f"max voxel error after 200 Adam steps: {float(err):.4f}")

# The gradient really is the matched backprojection of the residual:
x.grad = None
loss = 0.5 * ((proj(x) - measured) ** 2).sum()
loss.backward()
with torch.no_grad():
    resid = proj(x) - measured
manual = proj.backproject(resid)
print("autograd gradient == backprojected residual:",
      bool(torch.equal(x.grad, manual)))
