"""Quasi-distributions, moment kernels and phase-space quadrature.

Conventions (locked by the test suite):

* a phase-space point (x, p) maps to the coherent amplitude
  alpha = (x + i p)/sqrt(2);
* the Husimi function Q(alpha) = <alpha|rho|alpha> lies in [0, 1] and
  integrates to one against the measure dx dp / (2 pi);
* the Wigner function used here is W(alpha) = 2 Tr[rho D(2 alpha) Pi]
  (Pi the photon-number parity), bounded by [-2, 2], and integrates to one
  against the same measure;
* Q is W convolved with a unit-symmetric Gaussian: the moment kernels below
  are the polynomial pairs (v_w, v_p) with Gauss-transform(v_p) = v_w, so
  integrating W v_w or Q v_p against dx dp/(2 pi) returns the same Weyl
  moments.

Grids are uniform midpoint grids; the same layout doubles as the binning of
the simulated detectors, which keeps the statistical analysis and the Monte
Carlo sampling aligned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import (
    CvtomoError,
    DimensionError,
    EfficiencyError,
    ExtentError,
    UnsupportedOrderError,
)
from .fock import DensityMatrix, GaussianSpec

DEFAULT_EPS_GRID = 1e-4
DEFAULT_POINTS = 201
NEGATIVE_CLAMP = 1e-12
_CHUNK = 4096


class PhasePoint(NamedTuple):
    x: float
    p: float

    @property
    def alpha(self):
        return (self.x + 1j * self.p) / math.sqrt(2.0)


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform midpoint grid on [-extent, extent]^2.

    ``cell_weight`` is dx dp / (2 pi) per node, the discretized phase-space
    measure; node arrays are flattened row-major over (x, p).
    """

    extent: float
    points_per_axis: int
    axis: np.ndarray = field(init=False, repr=False, compare=False)
    xs: np.ndarray = field(init=False, repr=False, compare=False)
    ps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.points_per_axis < 16:
            raise CvtomoError(
                f"need at least 16 points per axis, got {self.points_per_axis}"
            )
        if not (self.extent > 0 and math.isfinite(self.extent)):
            raise CvtomoError(f"invalid grid extent {self.extent}")
        m = self.points_per_axis
        step = 2.0 * self.extent / m
        axis = -self.extent + (np.arange(m) + 0.5) * step
        gx, gp = np.meshgrid(axis, axis, indexing="ij")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "xs", gx.ravel())
        object.__setattr__(self, "ps", gp.ravel())

    @property
    def spacing(self):
        return 2.0 * self.extent / self.points_per_axis

    @property
    def cell_weight(self):
        return self.spacing**2 / (2.0 * math.pi)

    @property
    def n_nodes(self):
        return self.points_per_axis**2

    @classmethod
    def for_state(cls, rho, points=DEFAULT_POINTS, quantile_mass=1e-9):
        """Extent from the state's photon-number quantile.

        Sized so that kernel-weighted integrands up to degree 8 keep their
        tails inside the grid.
        """
        nq = rho.photon_quantile(quantile_mass)
        extent = max(6.0, math.sqrt(2.0 * (nq + 5.0)) + 5.0)
        return cls(extent=extent, points_per_axis=points)

    @classmethod
    def for_gaussian(cls, spec, points=DEFAULT_POINTS):
        """Extent for a Gaussian state: 6.5 Husimi standard deviations.

        The mass-coverage rule max(6, 4 sqrt(mu lam)) alone is kept as a
        floor; degree-8 integrands need the larger sigma-based extent.
        """
        sig = math.sqrt(max(spec.var_x, spec.var_p) + 0.5)
        extent = max(6.0, 4.0 * math.sqrt(spec.mu * spec.lam), 6.5 * sig)
        return cls(extent=extent, points_per_axis=points)


def coherent_amplitudes(xs, ps, dim):
    """Matrix C[i, n] = <n|alpha_i> for alpha = (x + i p)/sqrt(2)."""
    alpha = (np.asarray(xs, dtype=float) + 1j * np.asarray(ps, dtype=float)) / math.sqrt(2.0)
    alpha = np.atleast_1d(alpha)
    c = np.empty((alpha.size, dim), dtype=complex)
    c[:, 0] = np.exp(-0.5 * np.abs(alpha) ** 2)
    for n in range(1, dim):
        c[:, n] = c[:, n - 1] * alpha / math.sqrt(n)
    return c


def husimi_q(rho, xs, ps):
    """Husimi function Q = <alpha|rho|alpha>, clamped against -1e-12 noise."""
    scalar = np.isscalar(xs) and np.isscalar(ps)
    c = coherent_amplitudes(xs, ps, rho.dim)
    vals = np.einsum("im,im->i", c.conj(), c @ rho.elements.T).real
    bad = vals.min()
    if bad < -NEGATIVE_CLAMP:
        raise CvtomoError(f"Husimi value {bad:.3e} below clamping threshold")
    vals = np.clip(vals, 0.0, None)
    return float(vals[0]) if scalar else vals


def wigner_w(rho, xs, ps):
    """Wigner function in the [-2, 2] convention, W = 2 Tr[rho D(2a) Pi].

    Evaluated through the position-representation coherence,
    W(x, p) = 2 integral dy e^{-2 i p y} <x+y|rho|x-y>,
    which stays numerically stable far into the phase-space tails where
    displaced-Fock recurrences cancel catastrophically.  Points sharing an
    x value share the y-transform, so product grids evaluate in O(M) rows.
    """
    scalar = np.isscalar(xs) and np.isscalar(ps)
    x = np.atleast_1d(np.asarray(xs, dtype=float)).ravel()
    p = np.atleast_1d(np.asarray(ps, dtype=float)).ravel()
    if x.size != p.size:
        raise CvtomoError("xs and ps must pair elementwise")
    out = np.empty(x.size)
    support = math.sqrt(2.0 * rho.dim) + 3.0
    # sample finely enough that aliases fold onto W values outside the
    # state's momentum support, where W vanishes
    p_max = float(np.max(np.abs(p))) if p.size else 0.0
    dy = math.pi / (2.0 * (support + p_max))
    ux, inverse = np.unique(x, return_inverse=True)
    for i, xval in enumerate(ux):
        sel = np.nonzero(inverse == i)[0]
        half = support - abs(xval)
        if half <= 0.0:
            out[sel] = 0.0
            continue
        n_half = int(half / dy) + 1
        y = np.arange(-n_half, n_half + 1) * dy
        bra = hermite_functions(xval + y, rho.dim)
        ket = hermite_functions(xval - y, rho.dim)
        coherence = ((bra @ rho.elements) * ket).sum(axis=1)
        phase = np.exp(-2j * np.outer(p[sel], y))
        out[sel] = 2.0 * dy * (phase @ coherence).real
    return float(out[0]) if scalar else out


def loss_channel(rho, eta):
    """State after a transmissivity-eta loss channel, in the same truncation."""
    if not 0.0 < eta <= 1.0:
        raise EfficiencyError(f"efficiency must be in (0, 1], got {eta}")
    if eta == 1.0:
        return rho
    dim = rho.dim
    out = np.zeros_like(rho.elements)
    ms = np.arange(dim, dtype=float)
    log_eta = math.log(eta)
    log_loss = math.log1p(-eta)
    for k in range(dim):
        m = ms[: dim - k]
        logw = 0.5 * (
            gammaln(m + k + 1) - gammaln(m + 1) - gammaln(k + 1) + m * log_eta
        ) + 0.5 * k * log_loss
        w = np.exp(logw)
        out[: dim - k, : dim - k] += (w[:, None] * w[None, :]) * rho.elements[k:, k:]
    return DensityMatrix(dim=dim, elements=out, eps_tail=max(rho.eps_tail, 2 * rho.tail_mass + 1e-300))


def noclick_prob(rho, xs, ps, eta):
    """No-click probability p(alpha, eta) of the displaced on/off detector.

    Equals Tr[rho D(alpha) (1-eta)^{a^dag a} D(alpha)^dag], which is the
    Husimi function of the eta-attenuated state at the rescaled point
    sqrt(eta) alpha.  Reduces to husimi_q at eta = 1.
    """
    lossy = loss_channel(rho, eta)
    scale = math.sqrt(eta)
    return husimi_q(lossy, np.asarray(xs) * scale if not np.isscalar(xs) else xs * scale,
                    np.asarray(ps) * scale if not np.isscalar(ps) else ps * scale)


def hermite_functions(x, dim):
    """Oscillator eigenfunctions psi_n(x), vacuum variance 1/2, via recurrence."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    psi = np.empty((x.size, dim))
    psi[:, 0] = math.pi ** (-0.25) * np.exp(-0.5 * x**2)
    if dim > 1:
        psi[:, 1] = math.sqrt(2.0) * x * psi[:, 0]
    for n in range(2, dim):
        psi[:, n] = math.sqrt(2.0 / n) * x * psi[:, n - 1] - math.sqrt(
            (n - 1) / n
        ) * psi[:, n - 2]
    return psi


def quad_pdf(rho, x, theta):
    """Probability density of the rotated quadrature X_theta at value x."""
    scalar = np.isscalar(x)
    psi = hermite_functions(x, rho.dim)
    phases = np.exp(1j * theta * np.arange(rho.dim))
    rot = (rho.elements * phases[None, :]) * phases.conj()[:, None]
    vals = np.einsum("im,im->i", psi, (psi @ rot.T).real)
    vals = np.clip(vals, 0.0, None)
    return float(vals[0]) if scalar else vals


# Moment-kernel tables: component i of order m carries the monomial
# x^(m-i) p^i on the Wigner side; the Husimi-side polynomial is the
# Gauss-transform preimage.  Terms are (x-power, p-power, coefficient).
_P_TABLE = {
    1: (((1, 0, 1.0),), ((0, 1, 1.0),)),
    2: (
        ((2, 0, 1.0), (0, 0, -0.5)),
        ((1, 1, 1.0),),
        ((0, 2, 1.0), (0, 0, -0.5)),
    ),
    3: (
        ((3, 0, 1.0), (1, 0, -1.5)),
        ((2, 1, 1.0), (0, 1, -0.5)),
        ((1, 2, 1.0), (1, 0, -0.5)),
        ((0, 3, 1.0), (0, 1, -1.5)),
    ),
    4: (
        ((4, 0, 1.0), (2, 0, -3.0), (0, 0, 0.75)),
        ((3, 1, 1.0), (1, 1, -1.5)),
        ((2, 2, 1.0), (2, 0, -0.5), (0, 2, -0.5), (0, 0, 0.25)),
        ((1, 3, 1.0), (1, 1, -1.5)),
        ((0, 4, 1.0), (0, 2, -3.0), (0, 0, 0.75)),
    ),
}


def _eval_terms(terms, xs, ps):
    acc = np.zeros(np.broadcast(xs, ps).shape)
    for kx, kp, coeff in terms:
        acc += coeff * xs**kx * ps**kp
    return acc


@dataclass(frozen=True)
class MomentKernelSet:
    """Order-m polynomial kernel columns v_w (Wigner side) and v_p (Husimi side)."""

    order: int

    def __post_init__(self):
        if self.order not in _P_TABLE:
            raise UnsupportedOrderError(
                f"moment kernels implemented for orders 1..4, got {self.order}"
            )

    @property
    def n_components(self):
        return self.order + 1

    @property
    def exponents(self):
        """(x-power, p-power) of each component's Wigner-side monomial."""
        m = self.order
        return tuple((m - i, i) for i in range(m + 1))

    def terms(self, which):
        if which == "W":
            return tuple(((kx, kp, 1.0),) for kx, kp in self.exponents)
        if which == "P":
            return _P_TABLE[self.order]
        raise CvtomoError(f"kernel column must be 'W' or 'P', got {which!r}")

    def eval_grid(self, xs, ps, which):
        """Stack of component values, shape (m+1, len(xs))."""
        xs = np.asarray(xs, dtype=float)
        ps = np.asarray(ps, dtype=float)
        return np.stack([_eval_terms(t, xs, ps) for t in self.terms(which)])


def kernel_eval(kernels, point, which):
    """Kernel column at a single phase-space point, as a length m+1 vector."""
    x, p = point
    return kernels.eval_grid(np.atleast_1d(float(x)), np.atleast_1d(float(p)), which)[:, 0]


def integrate(grid, integrand):
    """Midpoint quadrature sum over the grid in the dx dp/(2 pi) measure.

    ``integrand`` is either a callable of the flattened node arrays
    (xs, ps) -> values or a precomputed array whose last axis runs over
    nodes.  Vector-valued integrands integrate componentwise.
    """
    if isinstance(integrand, Callable):
        values = np.asarray(integrand(grid.xs, grid.ps))
    else:
        values = np.asarray(integrand)
    if values.shape[-1] != grid.n_nodes:
        raise CvtomoError(
            f"integrand has {values.shape[-1]} values for {grid.n_nodes} nodes"
        )
    return grid.cell_weight * values.sum(axis=-1)


def check_coverage(grid, rho, eps_grid=DEFAULT_EPS_GRID, weight=None):
    """Verify the grid captures the state's Husimi (or supplied) weight mass.

    Returns the captured mass; raises ExtentError when more than ``eps_grid``
    of the unit mass is missing.
    """
    values = weight if weight is not None else husimi_q(rho, grid.xs, grid.ps)
    captured = float(integrate(grid, values))
    if captured < 1.0 - eps_grid:
        raise ExtentError(
            f"grid extent {grid.extent} captures only {captured:.8f} of the "
            f"unit mass (eps_grid = {eps_grid})",
            captured=captured,
        )
    if captured > 1.0 + 1e-9:
        raise CvtomoError(f"captured mass {captured} exceeds 1; inconsistent weight")
    return captured


def gauss_transform(terms, x, p, gh_points=12):
    """Unit-Gaussian smoothing of a kernel polynomial at one point.

    Computes E[poly(x + u, p + w)] with u, w independent N(0, 1/2), i.e. the
    convolution (2/pi) integral d^2alpha' exp(-2|alpha - alpha'|^2) poly(alpha')
    written in (x, p) coordinates.  Gauss-Hermite quadrature is exact for the
    polynomial orders used here.
    """
    nodes, weights = np.polynomial.hermite.hermgauss(gh_points)
    # hermgauss integrates against exp(-t^2); with sigma^2 = 1/2 the node
    # substitution u = sqrt(2 sigma^2) t = t is the identity
    u = nodes
    w = weights / math.sqrt(math.pi)
    total = 0.0
    for ui, wi in zip(u, w):
        row = 0.0
        for uj, wj in zip(u, w):
            row += wj * _eval_terms(terms, np.float64(x + ui), np.float64(p + uj))
        total += wi * row
    return float(total)
