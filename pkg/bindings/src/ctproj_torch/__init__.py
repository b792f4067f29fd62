"""PyTorch binding for the matched projector pairs.

`Projector` is a `torch.nn.Module` wrapping a `ctproj.ProjectorPair`.  The
forward pass applies the projector to a batched volume tensor and registers
the matched backprojection as the vector-Jacobian product, so autograd's
backward pass is bitwise identical to the native adjoint.  All numerics stay
in the wrapped package; this layer only moves (zero-copy) tensors across.

Shapes: volumes [B, z, y, x] <-> projections [B, views, rows, cols],
32-bit float, contiguous, CPU.
"""

from __future__ import annotations

import numpy as np
import torch

from ctproj import ProjectorPair, SIDDON, parse_config
from ctproj.errors import CtprojError
from ctproj.operator import adjoint as _adjoint_batch
from ctproj.operator import forward as _forward_batch

__all__ = [
    "NonContiguousError",
    "Projector",
    "ShapeMismatchError",
    "load_param",
]

__version__ = "0.1.0"


class ShapeMismatchError(CtprojError):
    """Tensor shape does not match the bound operator's contract."""


class NonContiguousError(CtprojError):
    """Tensor memory layout prevents zero-copy interchange."""


def _check_tensor(x: torch.Tensor, inner_shape, what: str) -> None:
    if x.dim() != 4 or x.shape[0] < 1 or tuple(x.shape[1:]) != tuple(inner_shape):
        raise ShapeMismatchError(
            f"{what} must have shape (B, {', '.join(map(str, inner_shape))}), "
            f"got {tuple(x.shape)}"
        )
    if x.dtype != torch.float32:
        raise ShapeMismatchError(f"{what} must be float32, got {x.dtype}")
    if x.device.type != "cpu":
        raise ShapeMismatchError(f"{what} must live on the CPU, got {x.device}")
    if not x.is_contiguous():
        raise NonContiguousError(f"{what} must be contiguous for zero-copy use")


class _ProjectFn(torch.autograd.Function):
    """y = A x with backward(ybar) = A^T ybar (the matched adjoint)."""

    @staticmethod
    def forward(ctx, x: torch.Tensor, pair: ProjectorPair) -> torch.Tensor:
        ctx.pair = pair
        y = _forward_batch(pair, x.detach().numpy())
        return torch.from_numpy(y)

    @staticmethod
    def backward(ctx, ybar: torch.Tensor):
        g = _adjoint_batch(ctx.pair, ybar.contiguous().detach().numpy())
        return torch.from_numpy(g), None


class _BackprojectFn(torch.autograd.Function):
    """x = A^T y with backward(xbar) = A xbar."""

    @staticmethod
    def forward(ctx, y: torch.Tensor, pair: ProjectorPair) -> torch.Tensor:
        ctx.pair = pair
        x = _adjoint_batch(pair, y.detach().numpy())
        return torch.from_numpy(x)

    @staticmethod
    def backward(ctx, xbar: torch.Tensor):
        g = _forward_batch(ctx.pair, xbar.contiguous().detach().numpy())
        return torch.from_numpy(g), None


class Projector(torch.nn.Module):
    """Differentiable X-ray projection operator over a fixed geometry.

    Construct empty and call :meth:`load_param` with a config file path, or
    pass a ready ``ProjectorPair``.  Inputs are batched volume tensors; the
    module output is the batched projection stack.  ``batch_size`` is a
    declared contract (checked on every call) rather than a buffer size:
    elements are processed sequentially to bound peak memory.
    """

    def __init__(self, pair: ProjectorPair | None = None, batch_size: int = 1):
        super().__init__()
        if batch_size < 1:
            raise ShapeMismatchError("batch_size must be >= 1")
        self._pair = pair
        self.batch_size = batch_size
        self.device_tag = "cpu"

    def load_param(self, path, model: str = SIDDON) -> "Projector":
        """Bind to the geometry/volume described by a JSON config file."""
        with open(path, "r", encoding="utf-8") as f:
            g, spec = parse_config(f.read())
        self._pair = ProjectorPair(model, g, spec)
        return self

    @property
    def pair(self) -> ProjectorPair:
        if self._pair is None:
            raise ShapeMismatchError(
                "projector is unbound; call load_param(path) first"
            )
        return self._pair

    @property
    def volume_shape(self):
        return self.pair.volumeSpec.shape

    @property
    def projection_shape(self):
        return self.pair.geometry.shape

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_tensor(x, self.volume_shape, "volume batch")
        if x.shape[0] != self.batch_size:
            raise ShapeMismatchError(
                f"declared batch_size={self.batch_size}, got batch of {x.shape[0]}"
            )
        return _ProjectFn.apply(x, self.pair)

    def backproject(self, y: torch.Tensor) -> torch.Tensor:
        """Apply the matched transpose, differentiable the other way."""
        _check_tensor(y, self.projection_shape, "projection batch")
        if y.shape[0] != self.batch_size:
            raise ShapeMismatchError(
                f"declared batch_size={self.batch_size}, got batch of {y.shape[0]}"
            )
        return _BackprojectFn.apply(y, self.pair)


def load_param(path, model: str = SIDDON, batch_size: int = 1) -> Projector:
    """One-call constructor: config file path -> bound projector module."""
    return Projector(batch_size=batch_size).load_param(path, model=model)
