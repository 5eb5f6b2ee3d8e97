"""Spectra of the Laplacian with antipodal boundary coupling on centrally symmetric planar domains."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .analysis import classify, inequality_report, sweep_family, verify_union
from .assembly import BoundaryCondition, apply_dirichlet, apply_nonlocal, assemble_free, reduce
from .eigensolve import Spectrum, smallest_eigenpairs
from .geometry import DomainKind, DomainSpec, SymmetricMesh, build_mesh, normalize_area
from .oracles import Parity, Problem, bessel_zero, disk_spectrum, rectangle_spectrum

__all__ = [
    "BACKEND",
    "BoundaryCondition",
    "DomainKind",
    "DomainSpec",
    "Parity",
    "Problem",
    "Spectrum",
    "SymmetricMesh",
    "apply_dirichlet",
    "apply_nonlocal",
    "assemble_free",
    "bessel_zero",
    "build_mesh",
    "classify",
    "disk_spectrum",
    "inequality_report",
    "normalize_area",
    "rectangle_spectrum",
    "reduce",
    "smallest_eigenpairs",
    "sweep_family",
    "verify_union",
]
