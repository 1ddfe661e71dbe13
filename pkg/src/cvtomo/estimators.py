"""Moment estimators for each record type and the scaled-MSE harness.

The harness runs R independent simulate-estimate cycles, scales the squared
error by the used sample size (fixed N for heterodyne and balanced homodyne,
the random used total for the no-click scheme) and reports jackknife
standard errors alongside the matching bound.  Replications own independent
``SeedSequence`` substreams, so results are bit-identical for any worker
count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    BHOM,
    BHOMOPT,
    HET,
    UHOM,
    scrb_het_numeric,
    scrb_realistic,
    scrb_uhom_numeric,
)
from .errors import (
    ConfigError,
    EmptyDataError,
    IllPosedError,
    UnstableReconstructionError,
)
from .fock import weyl_moment_vector
from .invradon import backproject_counts, project_components
from .phasespace import MomentKernelSet
from .sampling import (
    BhomRecord,
    het_probabilities,
    quadrature_cdf,
    uhom_probabilities,
    uniform_phases,
)


def estimate_sample_average(record, grid, kernels):
    """Count-weighted average of the Husimi-side kernel column.

    Works for heterodyne and no-click records alike: q_hat is the kernel
    value averaged over nodes with the observed counts as weights.
    """
    counts = np.asarray(record.counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise EmptyDataError("record holds no counts")
    vp = kernels.eval_grid(grid.xs, grid.ps, "P")
    return (vp @ counts) / total


def _backproject_record(record, grid, k_c):
    signed = np.zeros(grid.n_nodes)
    magnitude = np.zeros(grid.n_nodes)
    mids = record.bin_mids
    for j, theta in enumerate(record.thetas):
        xi = grid.xs * math.cos(theta) + grid.ps * math.sin(theta)
        s, a = backproject_counts(xi, mids, k_c, np.asarray(record.counts[j], dtype=float))
        signed += s
        magnitude += a
    return signed, magnitude


def estimate_bhom_invr(record, grid, kernels, k_c, stability=1e-9):
    """Filtered-backprojection ratio estimator for balanced-homodyne data.

    The grid should cover the state's Wigner support while staying inside
    the measured voltage range; nodes projecting outside it collect
    backprojection sidelobes that the polynomial kernels then amplify.
    Raises UnstableReconstructionError when the denominator is smaller than
    ``stability`` times the sum of the term magnitudes; with the band-limited
    kernel this happens occasionally by construction.
    """
    signed, magnitude = _backproject_record(record, grid, k_c)
    den = signed.sum()
    scale = magnitude.sum()
    if abs(den) <= stability * scale:
        raise UnstableReconstructionError(
            f"backprojection denominator {den:.3e} below {stability:.0e} x {scale:.3e}"
        )
    vw = kernels.eval_grid(grid.xs, grid.ps, "W")
    return (vw @ signed) / den


def reconstruct_wigner(record, grid, k_c):
    """Inverse-Radon Wigner reconstruction on the grid nodes (flattened).

    Normalized to the same [-2, 2] convention as ``phasespace.wigner_w``.
    """
    signed, _ = _backproject_record(record, grid, k_c)
    return signed / (2.0 * record.thetas.size * record.per_phase_total)


def _bhomopt_design(thetas, m):
    ks = m - np.arange(m + 1)
    cos_t = np.cos(thetas)[:, None]
    sin_t = np.sin(thetas)[:, None]
    combs = np.array([math.comb(m, int(k)) for k in ks], dtype=float)
    return combs[None, :] * cos_t ** ks[None, :] * sin_t ** (m - ks)[None, :]


def estimate_bhomopt(record, m):
    """Direct quadrature-moment inversion of binned homodyne data.

    Per-phase m-th sample moments of the bin midpoints are inverted through
    the rotation expansion <X_theta^m> = sum_k C(m,k) cos^k sin^(m-k) q_k by
    least squares, weighted with the per-phase moment variances estimated
    from the same data.
    """
    thetas = np.asarray(record.thetas, dtype=float)
    if np.unique(np.round(thetas % math.pi, 12)).size < m + 1:
        raise IllPosedError(f"need at least {m + 1} distinct phases for order {m}")
    counts = np.asarray(record.counts, dtype=float)
    totals = counts.sum(axis=1)
    if np.any(totals <= 0):
        raise EmptyDataError("a phase row holds no counts")
    mids = record.bin_mids
    mom_m = counts @ mids**m / totals
    mom_2m = counts @ mids ** (2 * m) / totals
    var = np.maximum(mom_2m - mom_m**2, 0.0) / totals
    floor = var.max() * 1e-12
    weights = 1.0 / np.maximum(var, floor) if floor > 0 else np.ones_like(var)
    design = _bhomopt_design(thetas, m)
    weighted = design * weights[:, None]
    normal = design.T @ weighted
    if np.linalg.cond(normal) > 1e12:
        raise IllPosedError("phase design is numerically rank deficient")
    return np.linalg.solve(normal, weighted.T @ mom_m)


def ratio_moment_predict(p, n0, which, l, l2=None):
    """Asymptotic ratio-statistic moments of independent binomial counts.

    ``which`` selects the expansion: 'A1' for E[n_l / N], 'A2' for
    E[n_l n_l' / N^2], 'A9' for E[n_l n_l' / (N0 N)], each with
    sigma_l^2 = p_l (1 - p_l)/N0 and N = sum_l n_l.
    """
    p = np.asarray(p, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    if np.any((p == 0.0) | (p == 1.0)):
        warnings.warn(
            "degenerate p in {0, 1}: its variance term vanishes exactly",
            stacklevel=2,
        )
    sig2 = p * (1.0 - p) / n0
    s = p.sum()
    sig_sum = sig2.sum()
    if which == "A1":
        return p[l] / s - sig2[l] / s**2 + p[l] * sig_sum / s**3
    if l2 is None:
        raise ValueError(f"{which} needs a second node index l2")
    delta = 1.0 if l == l2 else 0.0
    cross = p[l] * sig2[l2] + p[l2] * sig2[l]
    pair = p[l] * p[l2]
    if which == "A2":
        return (
            (sig2[l] * delta + pair) / s**2
            - 2.0 * cross / s**3
            + 3.0 * pair * sig_sum / s**4
        )
    if which == "A9":
        return (sig2[l] * delta + pair) / s - cross / s**2 + pair * sig_sum / s**3
    raise ValueError(f"unknown expansion {which!r}")


# ---------------------------------------------------------------------------
# Scaled-MSE Monte Carlo harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplerParams:
    """Sample sizes and detector geometry for the Monte Carlo harness."""

    n_het: int = 100_000
    events_per_point: int = 1_000
    eta: float = 1.0
    n_theta: int = 12
    per_phase_total: int = 10_000
    n_x: int = 161
    x_extent: float = 8.0
    k_c: float = 6.0


@dataclass(frozen=True)
class MseReport:
    method: str
    family: str
    param: float
    order: int
    replications: int
    scaled_mse: float
    standard_error: float
    scrb_reference: float
    ratio: float
    failure_rate: float
    seed: int
    metadata: dict = field(default_factory=dict)


class _Plan:
    """Precomputed sampling/estimation context shared by all replications."""

    def __init__(self, rho, method, order, grid, params):
        self.method = method
        self.order = order
        self.params = params
        kernels = MomentKernelSet(order)
        self.q = weyl_moment_vector(rho, order)
        if method in (HET, UHOM):
            vp = kernels.eval_grid(grid.xs, grid.ps, "P")
            if method == HET:
                if params.eta == 1.0:
                    probs, _ = het_probabilities(rho, grid)
                else:
                    # eta-deformed outcome density eta * p(alpha, eta); unit mass
                    weights = grid.cell_weight * params.eta * uhom_probabilities(
                        rho, grid, params.eta
                    )
                    probs = weights / weights.sum()
                self.fixed_n = params.n_het
            else:
                probs = uhom_probabilities(rho, grid, params.eta)
                self.fixed_n = None
            # drop nodes whose success probability is below 1e-12: the chance
            # of any such node ever producing a count is negligible across
            # even the largest replication budgets, and the binomial RNG cost
            # scales with the node count
            active = probs > 1e-12
            self.probs = probs[active]
            if method == HET:
                self.probs = self.probs / self.probs.sum()
            self.vp = np.ascontiguousarray(vp[:, active])
            return
        thetas = uniform_phases(params.n_theta)
        self.thetas = thetas
        self.bin_width = 2.0 * params.x_extent / params.n_x
        self.bin_mids = -params.x_extent + (np.arange(params.n_x) + 0.5) * self.bin_width
        self.bin_edges = -params.x_extent + np.arange(params.n_x + 1) * self.bin_width
        self.cdfs = [quadrature_cdf(rho, t, params.x_extent) for t in thetas]
        self.fixed_n = params.n_theta * params.per_phase_total
        if method == BHOMOPT:
            if params.n_theta < order + 1:
                raise ConfigError(
                    f"BHOMOPT needs n_theta >= {order + 1}", field="n_theta"
                )
            return
        if method != BHOM:
            raise ConfigError(f"unknown method {method!r}", field="method")
        # Backprojection bases: per phase, kernel sums of [v_w - q; 1] and
        # the magnitude sums used for the stability check.
        vw = kernels.eval_grid(grid.xs, grid.ps, "W")
        stacked = np.vstack([vw, np.ones((1, grid.n_nodes))])
        basis = np.empty((params.n_theta, order + 2, params.n_x))
        basis_abs = np.empty((params.n_theta, params.n_x))
        for j, theta in enumerate(thetas):
            xi = grid.xs * math.cos(theta) + grid.ps * math.sin(theta)
            basis[j] = project_components(xi, stacked, self.bin_mids, params.k_c)
            basis_abs[j] = project_components(
                xi, np.abs(stacked[-1:]), self.bin_mids, params.k_c, use_abs=True
            )[0]
        self.basis = basis
        self.basis_abs = basis_abs

    # -- one replication ---------------------------------------------------

    def replicate(self, rng):
        """Returns (squared_error, used_n, ok)."""
        if self.method == HET:
            counts = rng.multinomial(self.fixed_n, self.probs)
            q_hat = (self.vp @ counts) / self.fixed_n
            return float(((q_hat - self.q) ** 2).sum()), float(self.fixed_n), True
        if self.method == UHOM:
            counts = rng.binomial(self.params.events_per_point, self.probs)
            used = counts.sum()
            if used <= 0:
                return 0.0, 0.0, False
            q_hat = (self.vp @ counts) / used
            return float(((q_hat - self.q) ** 2).sum()), float(used), True
        counts = self._draw_binned(rng)
        if self.method == BHOMOPT:
            record = BhomRecord(
                thetas=self.thetas,
                counts=counts,
                per_phase_total=self.params.per_phase_total,
                x_extent=self.params.x_extent,
            )
            try:
                q_hat = estimate_bhomopt(record, self.order)
            except (IllPosedError, EmptyDataError):
                return 0.0, 0.0, False
            return float(((q_hat - self.q) ** 2).sum()), float(self.fixed_n), True
        sums = np.einsum("jck,jk->c", self.basis, counts)
        den = sums[-1]
        scale = float(np.einsum("jk,jk->", self.basis_abs, counts))
        if abs(den) <= 1e-9 * scale:
            return 0.0, 0.0, False
        q_hat = sums[:-1] / den + self.q  # basis carries v_w - q
        return float(((q_hat - self.q) ** 2).sum()), float(self.fixed_n), True

    def _draw_binned(self, rng):
        counts = np.empty((self.params.n_theta, self.params.n_x))
        for j, (mesh, cdf) in enumerate(self.cdfs):
            draws = np.interp(rng.random(self.params.per_phase_total), cdf, mesh)
            counts[j], _ = np.histogram(draws, bins=self.bin_edges)
        return counts


_WORKER_PLAN = None


def _init_worker(plan):
    global _WORKER_PLAN
    _WORKER_PLAN = plan


def _run_chunk(seeds):
    return [_WORKER_PLAN.replicate(np.random.default_rng(s)) for s in seeds]


def _jackknife_product_se(a, b):
    """Jackknife SE of mean(a) * mean(b) over paired replications."""
    r = a.size
    if r < 2:
        return float("nan")
    loo_a = (a.sum() - a) / (r - 1)
    loo_b = (b.sum() - b) / (r - 1)
    theta = loo_a * loo_b
    return math.sqrt((r - 1) / r * ((theta - theta.mean()) ** 2).sum())


def run_mse_harness(
    rho,
    method,
    order,
    grid,
    params,
    replications,
    seed,
    threads=1,
    reference=None,
    family="",
    param=float("nan"),
):
    """R simulate-estimate cycles; scaled MSE vs the matching bound.

    ``reference`` defaults to the numeric quadrature bound for HET and UHOM;
    for BHOMOPT and BHOM the caller must supply it (catalog value or
    cutoff-parameterized numeric bound).  Failed replications (unstable
    backprojection, empty data) are excluded from the MSE and reported
    through ``failure_rate``.
    """
    if replications < 2:
        raise ConfigError("need at least 2 replications", field="R")
    plan = _Plan(rho, method, order, grid, params)
    if reference is None:
        kernels = MomentKernelSet(order)
        if method == HET:
            if params.eta == 1.0:
                reference = scrb_het_numeric(rho, kernels, grid).scalar_bound
            else:
                reference = scrb_realistic(rho, kernels, grid, params.eta)[0].scalar_bound
        elif method == UHOM:
            if params.eta == 1.0:
                reference = scrb_uhom_numeric(rho, kernels, grid).scalar_bound
            else:
                reference = scrb_realistic(rho, kernels, grid, params.eta)[1].scalar_bound
        else:
            raise ConfigError(
                f"supply an explicit scrb reference for {method}", field="reference"
            )
    seeds = np.random.SeedSequence(seed).spawn(replications)
    if threads > 1:
        chunks = [c for c in np.array_split(seeds, 4 * threads) if len(c)]
        with ProcessPoolExecutor(
            max_workers=threads, initializer=_init_worker, initargs=(plan,)
        ) as pool:
            rows = [row for chunk in pool.map(_run_chunk, chunks) for row in chunk]
    else:
        rows = [plan.replicate(np.random.default_rng(s)) for s in seeds]
    err2 = np.array([r[0] for r in rows])
    used = np.array([r[1] for r in rows])
    ok = np.array([r[2] for r in rows])
    n_ok = int(ok.sum())
    if n_ok < 2:
        raise EmptyDataError(
            f"only {n_ok} of {replications} replications produced an estimate"
        )
    err2, used = err2[ok], used[ok]
    scaled = used.mean() * err2.mean()
    se = _jackknife_product_se(used, err2)
    per_experiment = float((used * err2).mean())
    report = MseReport(
        method=method,
        family=family,
        param=param,
        order=order,
        replications=replications,
        scaled_mse=float(scaled),
        standard_error=float(se),
        scrb_reference=float(reference),
        ratio=float(scaled / reference) if reference else float("nan"),
        failure_rate=1.0 - n_ok / replications,
        seed=seed,
        metadata={
            "mean_used_n": float(used.mean()),
            "per_experiment_scaled_mse": per_experiment,
            "per_experiment_se": float(
                (used * err2).std(ddof=1) / math.sqrt(n_ok)
            ),
        },
    )
    return report
