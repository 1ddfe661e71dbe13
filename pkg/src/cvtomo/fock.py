"""Truncated Fock-space linear algebra.

States are density matrices on a D-dimensional Fock basis.  Quadratures use
the convention X = (a + a^dag)/sqrt(2), P = (a - a^dag)/(i sqrt(2)), so the
vacuum has <X^2> = <P^2> = 1/2 and [X, P] = i.  The Weyl-moment oracle in
this module is the ground truth every estimator and bound is checked against;
it is plain matrix arithmetic, independent of any phase-space machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, StateValidationError, TruncationError, UnsupportedOrderError

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
EIGENVALUE_FLOOR = -1e-10
DEFAULT_EPS_TAIL = 1e-8


def ladder(dim):
    """Annihilation and creation operators on a ``dim``-dimensional Fock space.

    Returns the pair ``(a, a_dagger)`` with ``a[n-1, n] = sqrt(n)``.
    """
    if dim < 2:
        raise DimensionError(f"Fock dimension must be >= 2, got {dim}")
    a = np.zeros((dim, dim), dtype=complex)
    ns = np.arange(1, dim)
    a[ns - 1, ns] = np.sqrt(ns)
    return a, a.conj().T


def quadratures(dim):
    """Position and momentum matrices X = (a+a†)/√2, P = (a−a†)/(i√2)."""
    a, ad = ladder(dim)
    x = (a + ad) / math.sqrt(2.0)
    p = (a - ad) / (1j * math.sqrt(2.0))
    return x, p


def displacement(alpha, dim):
    """Displacement operator exp(alpha a† − alpha* a).

    Unitary to ~1e-8 as long as |alpha|^2 is small compared to dim/4;
    degradation shows up in the unitarity residue, not as an error.
    """
    if not np.isfinite(alpha):
        raise ValueError("displacement amplitude must be finite")
    a, ad = ladder(dim)
    return expm(alpha * ad - np.conj(alpha) * a)


def squeeze(r, dim):
    """Squeeze operator exp(r (a†² − a²)/2); r > 0 stretches X by e^r."""
    a, ad = ladder(dim)
    return expm(0.5 * r * (ad @ ad - a @ a))


@dataclass(frozen=True)
class GaussianSpec:
    """Centered Gaussian state with covariance eigenvalues mu*lam/2 and mu/(2*lam)."""

    mu: float
    lam: float

    def __post_init__(self):
        if self.mu < 1.0:
            raise ValueError(f"thermal parameter mu must be >= 1, got {self.mu}")
        if self.lam <= 0.0:
            raise ValueError(f"squeezing strength lam must be > 0, got {self.lam}")

    @property
    def var_x(self):
        return 0.5 * self.mu * self.lam

    @property
    def var_p(self):
        return 0.5 * self.mu / self.lam


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix on a truncated Fock basis.

    Construction renormalizes the trace, then enforces hermiticity,
    positivity and the tail-mass truncation diagnostic.  Instances are
    immutable; every operation in the package treats them as read-only.
    """

    dim: int
    elements: np.ndarray
    eps_tail: float = DEFAULT_EPS_TAIL
    photon_probs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mat = np.asarray(self.elements, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise DimensionError(
                f"elements shape {mat.shape} does not match dim {self.dim}"
            )
        herm_residue = np.max(np.abs(mat - mat.conj().T))
        if herm_residue > HERMITICITY_TOL:
            raise StateValidationError(
                f"density matrix not hermitian: max |rho - rho^dag| = {herm_residue:.3e}"
            )
        mat = 0.5 * (mat + mat.conj().T)
        tr = float(np.real(np.trace(mat)))
        if not math.isfinite(tr) or tr <= 0:
            raise StateValidationError(f"trace {tr} is not a positive number")
        mat = mat / tr
        if abs(np.real(np.trace(mat)) - 1.0) > TRACE_TOL:
            raise StateValidationError("trace renormalization failed")
        eigs = np.linalg.eigvalsh(mat)
        if eigs.min() < EIGENVALUE_FLOOR:
            raise StateValidationError(
                f"negative eigenvalue {eigs.min():.3e} below floor {EIGENVALUE_FLOOR}"
            )
        tail = float(np.real(mat[-1, -1]))
        if tail >= self.eps_tail:
            raise TruncationError(
                f"tail mass rho[{self.dim-1},{self.dim-1}] = {tail:.3e} "
                f"exceeds eps_tail = {self.eps_tail:.3e}; increase dim",
                tail_mass=tail,
            )
        object.__setattr__(self, "elements", mat)
        object.__setattr__(self, "photon_probs", np.real(np.diag(mat)).copy())

    @property
    def tail_mass(self):
        return float(self.photon_probs[-1])

    def mean_photon(self):
        return float(np.dot(self.photon_probs, np.arange(self.dim)))

    def photon_quantile(self, mass=1e-9):
        """Smallest Fock level holding all but ``mass`` of the population."""
        cum = np.cumsum(self.photon_probs)
        idx = int(np.searchsorted(cum, 1.0 - mass))
        return min(idx, self.dim - 1)


def build_fock(n, dim, eps_tail=DEFAULT_EPS_TAIL):
    """Projector onto the Fock state |n> in a ``dim``-dimensional space."""
    if not 0 <= n < dim:
        raise DimensionError(f"Fock level n={n} outside [0, {dim})")
    mat = np.zeros((dim, dim), dtype=complex)
    mat[n, n] = 1.0
    return DensityMatrix(dim=dim, elements=mat, eps_tail=eps_tail)


def thermal_probs(mu, dim):
    """Photon-number distribution of a thermal state with mu = 2*nbar + 1."""
    nbar = 0.5 * (mu - 1.0)
    if nbar == 0.0:
        probs = np.zeros(dim)
        probs[0] = 1.0
        return probs
    ratio = nbar / (1.0 + nbar)
    return np.exp(np.arange(dim) * math.log(ratio)) / (1.0 + nbar)


def build_gaussian(spec, dim, eps_tail=DEFAULT_EPS_TAIL, pad=20):
    """Centered Gaussian state: squeezed thermal with X-variance mu*lam/2.

    The state is assembled in a padded space (``dim + pad`` levels, at least
    1.5x ``dim``) so the squeeze exponential does not see the truncation edge,
    then cut back to ``dim``.  Raises TruncationError when the requested dim
    cannot hold the state within ``eps_tail``.
    """
    work = max(dim + pad, int(1.5 * dim))
    r = 0.5 * math.log(spec.lam)
    rho_th = np.diag(thermal_probs(spec.mu, work)).astype(complex)
    if r != 0.0:
        s = squeeze(r, work)
        rho = s @ rho_th @ s.conj().T
    else:
        rho = rho_th
    block = rho[:dim, :dim]
    lost = 1.0 - float(np.real(np.trace(block)))
    tail = float(np.real(block[dim - 1, dim - 1]))
    if tail >= eps_tail or lost >= eps_tail:
        raise TruncationError(
            f"Gaussian(mu={spec.mu}, lam={spec.lam}) needs more than dim={dim}: "
            f"tail mass {max(tail, lost):.3e} >= eps_tail {eps_tail:.3e}",
            tail_mass=max(tail, lost),
        )
    return DensityMatrix(dim=dim, elements=block, eps_tail=eps_tail)


def _weyl_ordering(k, l, dim):
    """Average of all distinct orderings of k X factors and l P factors."""
    x, p = quadratures(dim)
    words = set(permutations("X" * k + "P" * l))
    acc = np.zeros((dim, dim), dtype=complex)
    for word in words:
        term = np.eye(dim, dtype=complex)
        for ch in word:
            term = term @ (x if ch == "X" else p)
        acc += term
    return acc / len(words)


def weyl_moment_oracle(rho, k, l):
    """Ground-truth Weyl (symmetric ordered) moment Tr[rho W(X^k P^l)].

    Brute-force enumeration of all (k+l)!/(k! l!) operator orderings; this is
    the reference value used by every bound and estimator test.  Supports
    k + l <= 4.
    """
    if k < 0 or l < 0 or k + l > 4:
        raise UnsupportedOrderError(f"Weyl oracle supports k+l <= 4, got ({k}, {l})")
    if k == l == 0:
        return 1.0
    op = _weyl_ordering(k, l, rho.dim)
    val = complex(np.trace(rho.elements @ op))
    if abs(val.imag) > 1e-10:
        raise StateValidationError(
            f"Weyl moment ({k},{l}) has imaginary residue {val.imag:.3e}"
        )
    return float(val.real)


def weyl_moment_vector(rho, m):
    """All order-m Weyl moments ordered as x^m, x^(m-1)p, ..., p^m."""
    return np.array([weyl_moment_oracle(rho, m - i, i) for i in range(m + 1)])


def random_mixed_state(support_dim, dim=None, seed=None, eps_tail=DEFAULT_EPS_TAIL):
    """Random full-rank mixed state on ``support_dim`` levels, embedded in ``dim``.

    Drawn as A A†/tr with complex Gaussian A; the embedding pads zero rows so
    the truncation diagnostic stays exact.
    """
    if dim is None:
        dim = support_dim + 6
    if dim <= support_dim:
        raise DimensionError("embedding dim must exceed support_dim")
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(support_dim, support_dim)) + 1j * rng.normal(
        size=(support_dim, support_dim)
    )
    block = a @ a.conj().T
    block /= np.real(np.trace(block))
    mat = np.zeros((dim, dim), dtype=complex)
    mat[:support_dim, :support_dim] = block
    return DensityMatrix(dim=dim, elements=mat, eps_tail=eps_tail)
