"""Christoffel-Darboux kernels, Weyl m-functions and canonical systems.

The recurrence loops run in a compiled extension when it is built and in
pure Python otherwise; ``cdkernels.BACKEND`` says which one is active.
"""

__version__ = "0.1.0"

from ._backend import BACKEND, COMPILED
from .errors import (
    DomainError,
    HorizonError,
    IntegrationError,
    KernelOverflowError,
    ReparametrizationError,
    ScaleError,
    StallError,
)
from .mat2 import SpherePoint, chordal_distance, j_defect, mobius_apply
from .oprl import JacobiParams, cd_kernel, eval_polys, jacobi_from_id, tau_scale, transfer_matrix
from .tables import KernelTable

__all__ = [
    "BACKEND",
    "COMPILED",
    "DomainError",
    "HorizonError",
    "IntegrationError",
    "JacobiParams",
    "KernelOverflowError",
    "KernelTable",
    "ReparametrizationError",
    "ScaleError",
    "SpherePoint",
    "StallError",
    "cd_kernel",
    "chordal_distance",
    "eval_polys",
    "j_defect",
    "jacobi_from_id",
    "mobius_apply",
    "tau_scale",
    "transfer_matrix",
]
