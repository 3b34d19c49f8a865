"""Numerical laboratory for Fourier extension from the saddle xi3 = xi1 xi2.

Submodules: ``geometry`` (caps, strips, tubes, rescaling), ``surface`` and
``extension`` (densities, the extension operator, norms), ``wavepacket``,
``polypart`` (polynomial partitioning), ``broad`` (broad and bilinear
quantities) and ``cli``.
"""
from .errors import DegeneratePairError, InvalidParameterError, ResolutionError
from .extension import EvalGrid, evaluate_extension, evaluate_multires, lp_norm, surface_l2
from .families import make_family
from .geometry import Params, build_caps, build_omega_caps, build_strips, build_tubes
from .kernels import BACKEND
from .polypart import Partition, TrivariatePolynomial, partition
from .surface import SurfaceFunction
from .wavepacket import decompose, verify_properties

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DegeneratePairError", "EvalGrid", "InvalidParameterError", "Params",
    "Partition", "ResolutionError", "SurfaceFunction", "TrivariatePolynomial", "build_caps",
    "build_omega_caps", "build_strips", "build_tubes", "decompose", "evaluate_extension",
    "evaluate_multires", "lp_norm", "make_family", "partition", "surface_l2",
    "verify_properties",
]
