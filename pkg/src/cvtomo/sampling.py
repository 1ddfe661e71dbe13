"""Monte Carlo data generation for the three detection schemes.

All draws are reproducible: a record is a pure function of (state, geometry,
seed).  Parallel callers derive independent substreams with
``numpy.random.SeedSequence.spawn``; merging is plain count addition.

CSV layouts (one row per node or bin):

* heterodyne / unbalanced-homodyne records: ``index,x,p,count``
* balanced-homodyne records: ``phase_index,theta,bin_index,x_mid,count``
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EfficiencyError, ExtentError
from .phasespace import husimi_q, noclick_prob, quad_pdf

INVERSE_CDF_POINTS = 2001


@dataclass(frozen=True)
class HetRecord:
    """One multinomial heterodyne run binned on the phase-space grid."""

    counts: np.ndarray
    total: int
    captured_mass: float = 1.0


@dataclass(frozen=True)
class UhomRecord:
    """Independent per-node binomial no-click counts (N0 events per node)."""

    counts: np.ndarray
    events_per_point: int
    eta: float = 1.0

    @property
    def used_total(self):
        return int(self.counts.sum())


@dataclass(frozen=True)
class BhomRecord:
    """Binned quadrature samples, one multinomial row per LO phase."""

    thetas: np.ndarray
    counts: np.ndarray  # shape (n_theta, n_x)
    per_phase_total: int
    x_extent: float

    def __post_init__(self):
        if self.counts.shape[0] != self.thetas.size:
            raise ConfigError("counts rows must match number of phases")

    @property
    def n_x(self):
        return self.counts.shape[1]

    @property
    def bin_width(self):
        return 2.0 * self.x_extent / self.n_x

    @property
    def bin_mids(self):
        return -self.x_extent + (np.arange(self.n_x) + 0.5) * self.bin_width

    @property
    def bin_edges(self):
        return -self.x_extent + np.arange(self.n_x + 1) * self.bin_width


def het_probabilities(rho, grid, eps_grid=1e-4):
    """Renormalized cell probabilities cell_weight * Q(alpha_l)."""
    p = grid.cell_weight * husimi_q(rho, grid.xs, grid.ps)
    captured = float(p.sum())
    if captured < 1.0 - eps_grid:
        raise ExtentError(
            f"grid captures only {captured:.8f} of the Husimi mass", captured=captured
        )
    return p / captured, captured


def sample_het(rho, grid, n_samples, seed, eps_grid=1e-4):
    """One multinomial heterodyne record of ``n_samples`` phase-space hits."""
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1", field="N")
    probs, captured = het_probabilities(rho, grid, eps_grid)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_samples, probs)
    return HetRecord(counts=counts, total=int(n_samples), captured_mass=captured)


def uhom_probabilities(rho, grid, eta=1.0):
    """No-click probability at every grid node."""
    if not 0.0 < eta <= 1.0:
        raise EfficiencyError(f"efficiency must be in (0, 1], got {eta}")
    if eta == 1.0:
        p = husimi_q(rho, grid.xs, grid.ps)
    else:
        p = noclick_prob(rho, grid.xs, grid.ps, eta)
    return np.clip(p, 0.0, 1.0)


def sample_uhom(rho, grid, events_per_point, eta, seed):
    """Independent Binomial(N0, p(alpha_l, eta)) no-click counts per node."""
    if events_per_point < 1:
        raise ConfigError("events_per_point must be >= 1", field="N0")
    probs = uhom_probabilities(rho, grid, eta)
    rng = np.random.default_rng(seed)
    counts = rng.binomial(events_per_point, probs)
    return UhomRecord(counts=counts, events_per_point=int(events_per_point), eta=eta)


def quadrature_cdf(rho, theta, x_extent, mesh_points=INVERSE_CDF_POINTS):
    """(mesh, cdf) of the rotated-quadrature distribution for inverse sampling."""
    mesh = np.linspace(-x_extent, x_extent, mesh_points)
    pdf = quad_pdf(rho, mesh, theta)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(mesh))])
    if cdf[-1] <= 0:
        raise ExtentError("quadrature distribution has no mass inside x_extent")
    cdf /= cdf[-1]
    return mesh, cdf


def _draw_quadratures(rng, mesh, cdf, size):
    return np.interp(rng.random(size), cdf, mesh)


def sample_bhom(rho, thetas, n_x, x_extent, per_phase_total, seed,
                mesh_points=INVERSE_CDF_POINTS):
    """Binned quadrature samples: ``per_phase_total`` draws for each LO phase.

    Draws use inverse-CDF interpolation on a fine mesh (>= 10x the bin
    resolution), then land in ``n_x`` uniform bins over [-x_extent, x_extent].
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if thetas.size == 0:
        raise ConfigError("need at least one LO phase", field="phases")
    if per_phase_total < 1:
        raise ConfigError("per_phase_total must be >= 1", field="N_tilde")
    if mesh_points < 10 * n_x:
        raise ConfigError(
            f"inverse-CDF mesh ({mesh_points}) must be >= 10x bin count ({n_x})",
            field="mesh_points",
        )
    edges = -x_extent + np.arange(n_x + 1) * (2.0 * x_extent / n_x)
    rng = np.random.default_rng(seed)
    counts = np.empty((thetas.size, n_x), dtype=np.int64)
    for j, theta in enumerate(thetas):
        mesh, cdf = quadrature_cdf(rho, theta, x_extent, mesh_points)
        draws = _draw_quadratures(rng, mesh, cdf, per_phase_total)
        counts[j], _ = np.histogram(draws, bins=edges)
    return BhomRecord(
        thetas=thetas,
        counts=counts,
        per_phase_total=int(per_phase_total),
        x_extent=float(x_extent),
    )


def uniform_phases(n_theta):
    """n_theta LO phases uniform on [0, pi)."""
    if n_theta < 1:
        raise ConfigError("n_theta must be >= 1", field="n_theta")
    return np.arange(n_theta) * math.pi / n_theta


def expected_bhom_record(rho, thetas, n_x, x_extent, per_phase_total):
    """Noise-free record: counts are N_tilde times the midpoint bin masses."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    width = 2.0 * x_extent / n_x
    mids = -x_extent + (np.arange(n_x) + 0.5) * width
    counts = np.empty((thetas.size, n_x))
    for j, theta in enumerate(thetas):
        counts[j] = per_phase_total * quad_pdf(rho, mids, theta) * width
    return BhomRecord(
        thetas=thetas,
        counts=counts,
        per_phase_total=int(per_phase_total),
        x_extent=float(x_extent),
    )


def expected_grid_record(rho, grid, scale=1.0, eta=None, kind="het"):
    """Noise-free grid record with counts proportional to the sampled density."""
    if kind == "het":
        probs, captured = het_probabilities(rho, grid)
        return HetRecord(counts=scale * probs, total=int(scale), captured_mass=captured)
    probs = uhom_probabilities(rho, grid, 1.0 if eta is None else eta)
    return UhomRecord(counts=scale * probs, events_per_point=int(scale),
                      eta=1.0 if eta is None else eta)


def write_grid_record_csv(record, grid, path):
    """Serialize a heterodyne or no-click record: index,x,p,count."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "x", "p", "count"])
        for i, (x, p, c) in enumerate(zip(grid.xs, grid.ps, record.counts)):
            writer.writerow([i, f"{x:.17g}", f"{p:.17g}", f"{c:.17g}" if isinstance(c, float) else int(c)])


def write_bhom_record_csv(record, path):
    """Serialize a balanced-homodyne record: phase_index,theta,bin_index,x_mid,count."""
    mids = record.bin_mids
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phase_index", "theta", "bin_index", "x_mid", "count"])
        for j, theta in enumerate(record.thetas):
            for k in range(record.n_x):
                c = record.counts[j, k]
                writer.writerow(
                    [j, f"{theta:.17g}", k, f"{mids[k]:.17g}",
                     f"{c:.17g}" if isinstance(c, float) or record.counts.dtype.kind == "f" else int(c)]
                )
