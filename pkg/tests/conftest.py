"""Shared builders for test states and grids (cached: they are pure)."""

from functools import lru_cache

from cvtomo import fock
from cvtomo.phasespace import PhaseGrid

GAUSSIAN_DIMS = {1.0: 30, 1.5: 50, 2.0: 60, 3.0: 80}


@lru_cache(maxsize=None)
def gaussian_state(mu, lam=None):
    lam = mu if lam is None else lam
    dim = GAUSSIAN_DIMS.get(max(mu, lam), 90)
    return fock.build_gaussian(fock.GaussianSpec(mu, lam), dim)


@lru_cache(maxsize=None)
def fock_state(n, dim=50):
    return fock.build_fock(n, dim)


@lru_cache(maxsize=None)
def gaussian_grid(mu, lam=None, points=201):
    lam = mu if lam is None else lam
    return PhaseGrid.for_gaussian(fock.GaussianSpec(mu, lam), points=points)


@lru_cache(maxsize=None)
def state_grid(kind, param, points=201):
    if kind == "gaussian":
        return gaussian_grid(param, points=points)
    return PhaseGrid.for_state(fock_state(param), points=points)
