"""ctproj: quantitatively accurate, matched forward/back projection for
3D X-ray CT, with reference reconstruction algorithms.

Units: lengths in mm, attenuation in mm^-1, projections dimensionless.
"""

from .abel import RadialProfile, abel_backproject, abel_forward, revolve
from .datamodel import AngleMask, ProjectionSet, Volume, apply_mask, read_array, write_array
from .errors import (
    ConfigError,
    CtprojError,
    DivergenceDetectedError,
    SpecMismatchError,
    UnsupportedGeometryError,
)
from .geometry import (
    CONE_CURVED,
    CONE_FLAT,
    MODULAR,
    PARALLEL,
    DetectorSpec,
    Geometry,
    ModularView,
    Ray,
    VolumeSpec,
    parse_config,
    ray_for_sample,
    to_modular,
)
from .operator import (
    SF,
    SIDDON,
    ProjectorPair,
    adjoint,
    adjoint_check,
    estimate_opnorm,
    forward,
    vjp_adjoint,
    vjp_forward,
)
from .phantom import DESK_PHANTOM, Ellipsoid, analytic_project, load_phantom, rasterize
from .recon import (
    LsConfig,
    complete_sinogram,
    fbp_parallel,
    psnr,
    reconstruct_ls,
    refine_data_consistency,
)
from .sf import sf_backproject, sf_forward
from .siddon import siddon_backproject, siddon_forward

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
