"""Tomographic power of continuous-variable detection schemes.

Scaled Cramer-Rao bounds for heterodyne, unbalanced-homodyne and
balanced-homodyne (inverse-Radon and direct-moment) sampling, plus the
Monte Carlo machinery that checks the estimators against those bounds.
"""

from . import bounds, estimators, fock, phasespace, sampling
from .fock import DensityMatrix, GaussianSpec, build_fock, build_gaussian, weyl_moment_oracle
from .invradon import COMPILED_KERNEL
from .phasespace import MomentKernelSet, PhaseGrid

__version__ = "0.1.0"

__all__ = [
    "bounds",
    "estimators",
    "fock",
    "phasespace",
    "sampling",
    "DensityMatrix",
    "GaussianSpec",
    "build_fock",
    "build_gaussian",
    "weyl_moment_oracle",
    "MomentKernelSet",
    "PhaseGrid",
    "COMPILED_KERNEL",
    "__version__",
]
