"""Defect modes and inverse design for chains of subwavelength resonator dimers."""

from __future__ import annotations

import os as _os

# DIMERDEFECT_THREADS caps BLAS/OpenMP threads; it must be read before numpy loads.
if _os.environ.get("DIMERDEFECT_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["DIMERDEFECT_THREADS"])

from .core import (
    DefectSpec,
    Geometry,
    Lattice,
    MaterialSpec,
    Problem,
    TemporalProfile,
    TOL,
    reference_dimer,
    validate_config,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DefectSpec",
    "Geometry",
    "Lattice",
    "MaterialSpec",
    "Problem",
    "TemporalProfile",
    "TOL",
    "reference_dimer",
    "validate_config",
]
