"""Linear-operator layer over the projector pairs: batching, the VJP
contract, adjoint validation, and spectral-norm estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import ProjectionSet, Volume
from .errors import SpecMismatchError, UnsupportedGeometryError
from .geometry import MODULAR, Geometry, VolumeSpec
from .sf import sf_backproject, sf_forward
from .siddon import siddon_backproject, siddon_forward

SIDDON = "siddon"
SF = "sf"


@dataclass(frozen=True)
class ProjectorPair:
    """A forward projector A and its exactly matched transpose for a fixed
    (model, geometry, volume spec)."""

    model: str
    geometry: Geometry
    volumeSpec: VolumeSpec

    def __post_init__(self):
        if self.model not in (SIDDON, SF):
            raise SpecMismatchError(f"unknown projector model {self.model!r}")
        if self.model == SF and self.geometry.kind == MODULAR:
            raise UnsupportedGeometryError("SF does not support modular geometry")

    def apply(self, x: Volume) -> ProjectionSet:
        if x.spec != self.volumeSpec:
            raise SpecMismatchError("volume spec does not match the operator")
        if self.model == SIDDON:
            return siddon_forward(x, self.geometry)
        return sf_forward(x, self.geometry)

    def apply_adjoint(self, y: ProjectionSet) -> Volume:
        if y.geometry.shape != self.geometry.shape:
            raise SpecMismatchError("projection shape does not match the operator")
        if self.model == SIDDON:
            return siddon_backproject(y, self.volumeSpec)
        return sf_backproject(y, self.volumeSpec)


def _check_batch(xb, shape, what):
    xb = np.asarray(xb)
    if xb.ndim != 4 or xb.shape[1:] != shape:
        raise SpecMismatchError(
            f"{what} batch must have shape (B, {', '.join(map(str, shape))}), got {xb.shape}"
        )
    return xb


def forward(P: ProjectorPair, xb: np.ndarray) -> np.ndarray:
    """Apply A to each batch element; elements are processed sequentially so
    peak memory stays at one volume plus one projection set in flight."""
    xb = _check_batch(xb, P.volumeSpec.shape, "volume")
    out = np.empty((xb.shape[0],) + P.geometry.shape, dtype=np.float32)
    for b in range(xb.shape[0]):
        out[b] = P.apply(Volume(P.volumeSpec, xb[b])).values
    return out


def adjoint(P: ProjectorPair, yb: np.ndarray) -> np.ndarray:
    """Apply the matched transpose to each batch element."""
    yb = _check_batch(yb, P.geometry.shape, "projection")
    out = np.empty((yb.shape[0],) + P.volumeSpec.shape, dtype=np.float32)
    for b in range(yb.shape[0]):
        out[b] = P.apply_adjoint(ProjectionSet(P.geometry, yb[b])).values
    return out


def vjp_forward(P: ProjectorPair, x: np.ndarray, ybar: np.ndarray) -> np.ndarray:
    """Backward pass of y = Ax: the cotangent pulled back is A^T ybar
    (independent of x; A is linear)."""
    return adjoint(P, ybar)


def vjp_adjoint(P: ProjectorPair, y: np.ndarray, xbar: np.ndarray) -> np.ndarray:
    """Backward pass of x = A^T y: returns A xbar."""
    return forward(P, xbar)


def adjoint_check(P: ProjectorPair, trials: int, seed: int) -> dict:
    """Max relative inner-product mismatch |<Ax,y> - <x,A^T y>| / (|Ax| |y|)
    over unit-variance Gaussian draws.  Deterministic for a fixed seed."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(P.volumeSpec.shape).astype(np.float32)
        y = rng.standard_normal(P.geometry.shape).astype(np.float32)
        ax = P.apply(Volume(P.volumeSpec, x)).values
        aty = P.apply_adjoint(ProjectionSet(P.geometry, y)).values
        lhs = float(np.dot(ax.ravel().astype(np.float64), y.ravel().astype(np.float64)))
        rhs = float(np.dot(x.ravel().astype(np.float64), aty.ravel().astype(np.float64)))
        denom = float(np.linalg.norm(ax.astype(np.float64)) * np.linalg.norm(y.astype(np.float64)))
        if denom > 0:
            worst = max(worst, abs(lhs - rhs) / denom)
    return {
        "maxRelErr": worst,
        "trials": trials,
        "seed": seed,
        "generator": "numpy.random.default_rng (PCG64)",
    }


def estimate_opnorm(P: ProjectorPair, iters: int, seed: int) -> float:
    """Largest singular value of A via power iteration on A^T A."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(P.volumeSpec.shape).astype(np.float32)
    v /= np.float32(np.linalg.norm(v.astype(np.float64)))
    sigma = 0.0
    for _ in range(iters):
        av = P.apply(Volume(P.volumeSpec, v)).values
        sigma = float(np.linalg.norm(av.astype(np.float64)))
        atav = P.apply_adjoint(ProjectionSet(P.geometry, av)).values
        nrm = float(np.linalg.norm(atav.astype(np.float64)))
        if nrm == 0.0:
            return 0.0
        v = (atav / np.float32(nrm)).astype(np.float32)
    return sigma
