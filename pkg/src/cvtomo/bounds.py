"""Scaled Cramer-Rao bounds for the four sampling strategies.

Three independent computation routes are provided and cross-validated by the
test suite:

* numeric phase-space quadrature of the bound integrals (any state);
* the closed-form catalog for the mu = lambda Gaussian family and for Fock
  states (HET, UHOM, BHOMOPT);
* characteristic-function moments: series derivatives at the origin of the
  Husimi- and squared-Husimi-weighted generating functions (HET, UHOM).

The balanced-homodyne inverse-Radon bound has no closed form; its numeric
value is cutoff-parameterized and reported with its discretization metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigError, CvtomoError, UnsupportedOrderError
from .fock import GaussianSpec, weyl_moment_vector
from .invradon import project_components
from .phasespace import (
    MomentKernelSet,
    check_coverage,
    husimi_q,
    integrate,
    noclick_prob,
    quad_pdf,
)

HET = "HET"
UHOM = "UHOM"
BHOM = "BHOM"
BHOMOPT = "BHOMOPT"
METHODS = (HET, UHOM, BHOM, BHOMOPT)


@dataclass(frozen=True)
class ScrbReport:
    """Scalar bound with its per-component breakdown and provenance tag."""

    method: str
    order: int
    scalar_bound: float
    per_component: tuple = ()
    eta: float = 1.0
    provenance: str = "numeric"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}", field="method")
        if self.scalar_bound < 0:
            raise CvtomoError(f"negative bound {self.scalar_bound}")
        if self.per_component:
            total = math.fsum(self.per_component)
            if abs(total - self.scalar_bound) > 1e-12 * max(1.0, abs(total)):
                raise CvtomoError("scalar bound does not match component sum")


def _report(method, kernels, per, eta, provenance, metadata=None):
    per = tuple(float(v) for v in per)
    return ScrbReport(
        method=method,
        order=kernels.order,
        scalar_bound=math.fsum(per),
        per_component=per,
        eta=eta,
        provenance=provenance,
        metadata=metadata or {},
    )


def _squared_deviation(rho, kernels, grid):
    vp = kernels.eval_grid(grid.xs, grid.ps, "P")
    q = weyl_moment_vector(rho, kernels.order)
    return (vp - q[:, None]) ** 2


def scrb_het_numeric(rho, kernels, grid, eps_grid=1e-4):
    """Heterodyne bound: Husimi-weighted quadrature of the kernel deviation."""
    q_vals = husimi_q(rho, grid.xs, grid.ps)
    check_coverage(grid, rho, eps_grid, weight=q_vals)
    per = integrate(grid, q_vals[None, :] * _squared_deviation(rho, kernels, grid))
    return _report(HET, kernels, per, 1.0, "numeric")


def scrb_uhom_numeric(rho, kernels, grid, eps_grid=1e-4):
    """Unbalanced-homodyne bound: binomially deformed weight Q(1-Q)."""
    q_vals = husimi_q(rho, grid.xs, grid.ps)
    check_coverage(grid, rho, eps_grid, weight=q_vals)
    weight = q_vals * (1.0 - q_vals)
    per = integrate(grid, weight[None, :] * _squared_deviation(rho, kernels, grid))
    return _report(UHOM, kernels, per, 1.0, "numeric")


def scrb_realistic(rho, kernels, grid, eta, eps_grid=1e-4):
    """Subunit-efficiency bounds (HET, UHOM) from the no-click probability.

    Both use the weight eta * p(alpha, eta); the UHOM variant additionally
    deforms by (1 - p).  At eta = 1 they reduce to the ideal bounds.
    """
    p_vals = noclick_prob(rho, grid.xs, grid.ps, eta)
    check_coverage(grid, rho, eps_grid, weight=eta * p_vals)
    dev2 = _squared_deviation(rho, kernels, grid)
    het_per = eta * integrate(grid, p_vals[None, :] * dev2)
    uhom_per = eta * integrate(grid, (p_vals * (1.0 - p_vals))[None, :] * dev2)
    meta = {"eta": eta}
    return (
        _report(HET, kernels, het_per, eta, "numeric", meta),
        _report(UHOM, kernels, uhom_per, eta, "numeric", meta),
    )


@dataclass(frozen=True)
class BhomConfig:
    """Discretization of the inverse-Radon bound double integral."""

    n_theta: int = 12
    n_x: int = 161
    x_extent: float = 8.0
    k_c: float = 6.0

    def __post_init__(self):
        if self.k_c <= 0:
            raise ConfigError(f"frequency cutoff k_c must be > 0, got {self.k_c}", field="k_c")
        if self.n_x < 8:
            raise ConfigError(f"need at least 8 voltage bins, got {self.n_x}", field="n_x")
        if self.x_extent <= 0:
            raise ConfigError("x_extent must be positive", field="x_extent")

    @property
    def thetas(self):
        return np.arange(self.n_theta) * math.pi / self.n_theta

    @property
    def bin_width(self):
        return 2.0 * self.x_extent / self.n_x

    @property
    def bin_mids(self):
        return -self.x_extent + (np.arange(self.n_x) + 0.5) * self.bin_width

    @property
    def bin_edges(self):
        return -self.x_extent + np.arange(self.n_x + 1) * self.bin_width


def scrb_bhom_numeric(rho, kernels, grid, config=None, eps_grid=1e-4):
    """Inverse-Radon balanced-homodyne bound, cutoff-parameterized.

    Discretizes the double phase-space integral against the per-phase
    multinomial covariance [p delta - p p] of the binned quadrature data.
    The value depends on (k_c, n_theta, n_x, grid); that tuple is attached
    as metadata rather than hidden.
    """
    config = config or BhomConfig()
    m = kernels.order
    if config.n_theta < m + 1:
        raise ConfigError(
            f"need at least m+1 = {m + 1} phases, got {config.n_theta}",
            field="n_theta",
        )
    check_coverage(grid, rho, eps_grid)
    q = weyl_moment_vector(rho, m)
    vw = kernels.eval_grid(grid.xs, grid.ps, "W")
    # fold the phase-space measure into the components once
    comps = (vw - q[:, None]) * grid.cell_weight
    xb = config.bin_mids
    per = np.zeros(m + 1)
    for theta in config.thetas:
        xi = grid.xs * math.cos(theta) + grid.ps * math.sin(theta)
        psi = project_components(xi, comps, xb, config.k_c)
        pw = quad_pdf(rho, xb, theta) * config.bin_width
        mean = psi @ pw
        second = (psi * psi) @ pw
        per += second - mean**2
    per /= 2.0 * config.n_theta
    meta = {
        "k_c": config.k_c,
        "n_theta": config.n_theta,
        "n_x": config.n_x,
        "x_extent": config.x_extent,
        "points_per_axis": grid.points_per_axis,
        "grid_extent": grid.extent,
    }
    return _report(BHOM, kernels, per, 1.0, "numeric", meta)


# ---------------------------------------------------------------------------
# Closed-form catalog (mu = lambda Gaussians and Fock states)
# ---------------------------------------------------------------------------

def _gamma_ratio_half(n):
    """Gamma(n + 3/2) / (sqrt(pi) Gamma(n + 1))."""
    return math.exp(math.lgamma(n + 1.5) - math.lgamma(n + 1.0)) / math.sqrt(math.pi)


def _gauss_het(mu, m):
    u = mu * mu
    if m == 1:
        return 0.5 * (3.0 + u)
    if m == 2:
        return 0.5 * (6.0 + 3.0 * u + u * u)
    if m == 3:
        return (85.0 + 35.0 * u + 33.0 * u**2 + 15.0 * u**3) / 8.0
    if m == 4:
        return (396.0 + 117.0 * u + 148.0 * u**2 + 135.0 * u**3 + 48.0 * u**4) / 8.0
    raise UnsupportedOrderError(f"catalog covers m = 1..4, got {m}")


def _gauss_uhom_correction(mu, m):
    u = mu * mu
    root = math.sqrt(2.0 + 2.0 * u)
    if m == 1:
        return (3.0 + u) / (4.0 * root)
    if m == 2:
        return (17.0 + 8.0 * u + 3.0 * u * u) / (16.0 * root)
    if m == 3:
        # catalog numerator re-derived: 77 + 21 mu^2 + 15 mu^4 + 15 mu^6
        return (77.0 + 21.0 * u + 15.0 * u**2 + 15.0 * u**3) / (64.0 * root)
    if m == 4:
        return (735.0 + 142.0 * u + 40.0 * u**2 + 234.0 * u**3 + 177.0 * u**4) / (
            256.0 * root
        )
    raise UnsupportedOrderError(f"catalog covers m = 1..4, got {m}")


def _gauss_bhomopt(mu, m):
    if m == 1:
        return 0.5 * (1.0 + mu) ** 2
    if m == 2:
        return 0.25 * (2.0 + 5.0 * mu + 2.0 * mu**2 + 5.0 * mu**3 + 2.0 * mu**4)
    if m == 3:
        return (5.0 / 24.0) * (
            9.0
            + 30.0 * mu
            + 9.0 * mu**2
            + 16.0 * mu**3
            + 9.0 * mu**4
            + 30.0 * mu**5
            + 9.0 * mu**6
        )
    if m == 4:
        return 6.0 + mu * (mu**2 + 1.0) * (
            153.0 + 36.0 * mu - 88.0 * mu**2 + 153.0 * mu**4 + 36.0 * mu**5
        ) / 6.0
    raise UnsupportedOrderError(f"catalog covers m = 1..4, got {m}")


def _fock_het(n, m):
    if m == 1:
        return 2.0 * (n + 1.0)
    if m == 2:
        return 0.5 * (n + 1.0) * (3.0 * n + 10.0)
    if m == 3:
        return (n + 1.0) * (6.0 * n**2 + 20.0 * n + 21.0)
    if m == 4:
        return (n + 1.0) * (45.0 * n**3 + 437.0 * n**2 + 1040.0 * n + 844.0) / 8.0
    raise UnsupportedOrderError(f"catalog covers m = 1..4, got {m}")


def _fock_uhom_correction(n, m):
    if m == 1:
        return _gamma_ratio_half(n)
    if m == 2:
        return math.comb(2 * n, n) * (n + 1.0) * (6.0 * n + 7.0) / 2.0 ** (2 * n + 3)
    if m == 3:
        return 0.5 * (6.0 * n**2 + 5.0 * n + 4.0) * _gamma_ratio_half(n)
    if m == 4:
        # Gamma(n + 1/2)/Gamma(n + 1) = Gamma(n + 3/2)/((n + 1/2) Gamma(n + 1))
        ratio = _gamma_ratio_half(n) / (n + 0.5)
        return (n + 1.0) * (180.0 * n**3 + 544.0 * n**2 + 521.0 * n + 166.0) * ratio / 64.0
    raise UnsupportedOrderError(f"catalog covers m = 1..4, got {m}")


def _fock_bhomopt(n, m):
    if m == 1:
        return 2.0 * (2.0 * n + 1.0)
    if m == 2:
        return 4.0 * (n**2 + n + 1.0)
    if m == 3:
        return (14.0 / 9.0) * (20.0 * n**3 + 30.0 * n**2 + 40.0 * n + 15.0)
    if m == 4:
        return (77.0 / 36.0) * (
            17.0 * n**4 + 34.0 * n**3 + 139.0 * n**2 + 122.0 * n + 48.0
        )
    raise UnsupportedOrderError(f"catalog covers m = 1..4, got {m}")


def closed_form(family, param, method, m):
    """Catalog value of the bound.

    ``family`` is 'gaussian' (mu = lambda, param = mu) or 'fock' (param = n);
    ``method`` one of HET, UHOM, BHOMOPT.  The catalog gives totals only, so
    ``per_component`` stays empty.
    """
    if m not in (1, 2, 3, 4):
        raise UnsupportedOrderError(f"catalog covers m = 1..4, got {m}")
    if family == "gaussian":
        mu = float(param)
        if mu < 1.0:
            raise ConfigError(f"mu must be >= 1, got {mu}", field="param")
        table = {
            HET: _gauss_het,
            UHOM: lambda v, k: _gauss_het(v, k) - _gauss_uhom_correction(v, k),
            BHOMOPT: _gauss_bhomopt,
        }
    elif family == "fock":
        n = int(param)
        if n < 0:
            raise ConfigError(f"n must be >= 0, got {n}", field="param")
        param = n
        table = {
            HET: _fock_het,
            UHOM: lambda v, k: _fock_het(v, k) - _fock_uhom_correction(v, k),
            BHOMOPT: _fock_bhomopt,
        }
    else:
        raise ConfigError(f"unknown family {family!r}", field="family")
    if method not in table:
        raise ConfigError(
            f"no closed form for method {method!r} (catalog: HET, UHOM, BHOMOPT)",
            field="method",
        )
    value = table[method](param, m)
    return ScrbReport(
        method=method,
        order=m,
        scalar_bound=float(value),
        per_component=(),
        eta=1.0,
        provenance="closed_form",
        metadata={"family": family, "param": param},
    )


# ---------------------------------------------------------------------------
# Characteristic-function route
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CharacteristicSpec:
    """Which generating function to differentiate.

    chi1 generates Husimi-weighted moments; chi2 generates the squared-Husimi
    weighted moments (the correction term of the UHOM bound), whose zeroth
    moment is the mass 1/(2 sqrt(det G)) for Gaussians and
    binom(2n, n)/2^(2n+1) for Fock states.
    """

    family: str
    variant: str
    mu: float | None = None
    lam: float | None = None
    n: int | None = None

    def __post_init__(self):
        if self.variant not in ("chi1", "chi2"):
            raise ConfigError(f"variant must be chi1 or chi2, got {self.variant!r}")
        if self.family == "gaussian":
            if self.mu is None:
                raise ConfigError("gaussian spec needs mu")
            lam = self.mu if self.lam is None else self.lam
            object.__setattr__(self, "lam", lam)
            GaussianSpec(self.mu, lam)  # domain validation
        elif self.family == "fock":
            if self.n is None or self.n < 0:
                raise ConfigError("fock spec needs n >= 0")
        else:
            raise ConfigError(f"unknown family {self.family!r}")


def _double_factorial(k):
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def _fock_series_coeff(n, j, half):
    """Coefficient of s^j in e^{c s} L_n(-c s) with c = 1 (half=False) or 1/2."""
    c = Fraction(1, 2) if half else Fraction(1)
    total = Fraction(0)
    for i in range(0, min(j, n) + 1):
        total += (
            Fraction(math.comb(n, i))
            * c**i
            / math.factorial(i)
            * c ** (j - i)
            / math.factorial(j - i)
        )
    return total


def characteristic_moment(spec, k, l):
    """Mixed moment of order (k, l) from the characteristic-function series.

    Returns the Husimi-weighted moment of x^k p^l (chi1) or its
    squared-Husimi counterpart (chi2), evaluated by exact series expansion
    at the origin; no finite differencing is involved.  Supports k + l <= 8.
    """
    if k < 0 or l < 0 or k + l > 8:
        raise UnsupportedOrderError(f"characteristic moments support k+l <= 8, got ({k}, {l})")
    if k % 2 or l % 2:
        return 0.0
    if spec.family == "gaussian":
        a = 0.5 * (spec.mu * spec.lam + 1.0)
        b = 0.5 * (spec.mu / spec.lam + 1.0)
        if spec.variant == "chi2":
            pref = 0.5 / math.sqrt(a * b)
            a, b = 0.5 * a, 0.5 * b
        else:
            pref = 1.0
        return (
            pref
            * _double_factorial(k - 1)
            * a ** (k // 2)
            * _double_factorial(l - 1)
            * b ** (l // 2)
        )
    j = (k + l) // 2
    n = spec.n
    if spec.variant == "chi1":
        coeff = _fock_series_coeff(n, j, half=False)
        pref = Fraction(1)
    else:
        coeff = _fock_series_coeff(2 * n, j, half=True)
        pref = Fraction(math.comb(2 * n, n), 2 ** (2 * n + 1))
    value = (
        pref
        * coeff
        * Fraction(math.comb(j, k // 2), 2**j)
        * math.factorial(k)
        * math.factorial(l)
    )
    return float(value)


def _poly_product(terms_a, terms_b):
    out = {}
    for kx, kp, ca in terms_a:
        for lx, lp, cb in terms_b:
            key = (kx + lx, kp + lp)
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def _poly_moment(poly, spec):
    return math.fsum(
        c * characteristic_moment(spec, kx, kp) for (kx, kp), c in poly.items()
    )


def scrb_characteristic(family, param, method, m, lam=None):
    """HET/UHOM bound assembled from characteristic-function moments.

    Independent of both the quadrature route and the closed-form catalog;
    for Gaussians it also covers mu != lambda (pass ``lam``).
    """
    if method not in (HET, UHOM):
        raise ConfigError(
            f"characteristic route covers HET and UHOM, got {method!r}", field="method"
        )
    kernels = MomentKernelSet(m)
    if family == "gaussian":
        spec1 = CharacteristicSpec("gaussian", "chi1", mu=float(param), lam=lam)
        spec2 = CharacteristicSpec("gaussian", "chi2", mu=float(param), lam=lam)
    else:
        spec1 = CharacteristicSpec("fock", "chi1", n=int(param))
        spec2 = CharacteristicSpec("fock", "chi2", n=int(param))
    per = []
    mass2 = characteristic_moment(spec2, 0, 0)
    for terms in kernels.terms("P"):
        poly = {(kx, kp): c for kx, kp, c in terms}
        sq = _poly_product(terms, terms)
        q_i = _poly_moment(poly, spec1)
        het_i = _poly_moment(sq, spec1) - q_i * q_i
        if method == HET:
            per.append(het_i)
        else:
            chi2_sq = _poly_moment(sq, spec2)
            chi2_lin = _poly_moment(poly, spec2)
            per.append(het_i - (chi2_sq - 2.0 * q_i * chi2_lin + q_i * q_i * mass2))
    return ScrbReport(
        method=method,
        order=m,
        scalar_bound=math.fsum(per),
        per_component=tuple(per),
        eta=1.0,
        provenance="characteristic",
        metadata={"family": family, "param": param, "lam": lam},
    )


def crossover_find(m, method_pair, mu_range, tol=1e-6):
    """Bisection root of the closed-form difference over a mu interval.

    Returns the crossover mu, or None when the two curves do not change
    order inside the interval (an explicit no-crossover result).
    """
    lo, hi = float(mu_range[0]), float(mu_range[1])
    if not lo < hi:
        raise ConfigError(f"invalid mu range {mu_range}", field="mu_range")
    a_name, b_name = method_pair

    def diff(mu):
        return (
            closed_form("gaussian", mu, a_name, m).scalar_bound
            - closed_form("gaussian", mu, b_name, m).scalar_bound
        )

    f_lo, f_hi = diff(lo), diff(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = diff(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)
