import math

import numpy as np
import pytest

from conftest import fock_state, gaussian_grid, gaussian_state, state_grid
from cvtomo import fock, phasespace as ps
from cvtomo.errors import CvtomoError, EfficiencyError, ExtentError, UnsupportedOrderError


def test_husimi_examples():
    vac = fock_state(0)
    assert ps.husimi_q(vac, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    # |<alpha|0>|^2 = exp(-|alpha|^2) with |alpha|^2 = (x^2 + p^2)/2
    assert ps.husimi_q(vac, 2.0, 0.0) == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert ps.husimi_q(fock_state(3), 0.0, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_husimi_range():
    grid = gaussian_grid(2.0)
    q = ps.husimi_q(gaussian_state(2.0), grid.xs, grid.ps)
    assert q.min() >= 0.0
    assert q.max() <= 1.0 + 1e-12


def test_wigner_examples():
    assert ps.wigner_w(fock_state(0), 0.0, 0.0) == pytest.approx(2.0, rel=1e-10)
    assert ps.wigner_w(fock_state(1), 0.0, 0.0) == pytest.approx(-2.0, rel=1e-10)
    assert ps.wigner_w(fock_state(3), 0.0, 0.0) == pytest.approx(-2.0, rel=1e-10)


def test_wigner_matches_displaced_parity_matrix():
    # cross-check the column recurrence against the dense matrix exponential
    rho = gaussian_state(2.0)
    parity = np.diag(np.where(np.arange(rho.dim) % 2 == 0, 1.0, -1.0))
    for x, p in [(0.3, -0.4), (1.2, 0.7), (-2.0, 0.1)]:
        beta = math.sqrt(2.0) * (x + 1j * p)
        d = fock.displacement(beta, rho.dim)
        direct = 2.0 * np.real(np.trace(rho.elements @ d @ parity))
        assert ps.wigner_w(rho, x, p) == pytest.approx(direct, abs=1e-9)


def test_wigner_exact_gaussian_tail():
    # squeezed thermal mu = lam = 2: W = exp(-x^2/4 - p^2) in this convention
    rho = gaussian_state(2.0)
    for x, p in [(0.0, 0.0), (2.0, 0.5), (5.0, 0.0), (0.0, 3.0), (7.0, 1.0)]:
        exact = math.exp(-x * x / 4.0 - p * p)
        assert ps.wigner_w(rho, x, p) == pytest.approx(exact, abs=5e-8)


def test_noclick_reduces_to_husimi_at_unit_eta():
    grid = state_grid("fock", 1, points=61)
    rho = fock_state(1)
    np.testing.assert_allclose(
        ps.noclick_prob(rho, grid.xs, grid.ps, 1.0),
        ps.husimi_q(rho, grid.xs, grid.ps),
        atol=1e-10,
    )


def test_noclick_examples():
    assert ps.noclick_prob(fock_state(0), 0.0, 0.0, 0.5) == pytest.approx(1.0, abs=1e-12)
    # Tr[|1><1| (1-eta)^n] = 1 - eta
    assert ps.noclick_prob(fock_state(1), 0.0, 0.0, 0.5) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(EfficiencyError):
        ps.noclick_prob(fock_state(0), 0.0, 0.0, 0.0)
    with pytest.raises(EfficiencyError):
        ps.noclick_prob(fock_state(0), 0.0, 0.0, 1.2)


def _noclick_direct(rho, x, p, eta):
    """Independent oracle: normal-ordered matrix elements of the displaced
    no-click operator, <k|M|m> = e^{-eta|a|^2} sqrt(k! m!) sum_j (1-eta)^j
    (eta a)^{k-j} (eta a*)^{m-j} / (j! (k-j)! (m-j)!)."""
    alpha = (x + 1j * p) / math.sqrt(2.0)
    dim = rho.dim
    mat = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        for m in range(dim):
            acc = 0.0
            for j in range(min(k, m) + 1):
                acc += (
                    (1.0 - eta) ** j
                    * (eta * alpha) ** (k - j)
                    * (eta * np.conj(alpha)) ** (m - j)
                    / (
                        math.factorial(j)
                        * math.factorial(k - j)
                        * math.factorial(m - j)
                    )
                )
            mat[k, m] = (
                math.exp(-eta * abs(alpha) ** 2)
                * math.sqrt(math.factorial(k) * math.factorial(m))
                * acc
            )
    return float(np.real(np.trace(rho.elements @ mat)))


@pytest.mark.parametrize("eta", [0.5, 0.8])
def test_noclick_against_normal_ordered_oracle(eta):
    rho = fock.random_mixed_state(6, 12, seed=5)
    for x, p in [(0.0, 0.0), (0.7, -0.3), (1.5, 1.1)]:
        expected = _noclick_direct(rho, x, p, eta)
        assert ps.noclick_prob(rho, x, p, eta) == pytest.approx(expected, abs=1e-10)


def test_noclick_bounded_on_grid():
    grid = state_grid("fock", 3, points=81)
    for eta in (0.5, 0.8, 1.0):
        vals = ps.noclick_prob(fock_state(3), grid.xs, grid.ps, eta)
        assert vals.min() >= 0.0
        assert vals.max() <= 1.0 + 1e-12


def test_quad_pdf_examples():
    assert ps.quad_pdf(fock_state(0), 0.0, 0.3) == pytest.approx(
        1.0 / math.sqrt(math.pi), rel=1e-12
    )
    assert ps.quad_pdf(fock_state(1), 0.0, 1.1) == pytest.approx(0.0, abs=1e-14)
    expected = math.exp(-0.25) / math.sqrt(4.0 * math.pi)
    assert ps.quad_pdf(gaussian_state(2.0), 1.0, 0.0) == pytest.approx(expected, rel=1e-8)


def test_quad_pdf_normalization():
    xs = np.linspace(-10, 10, 4001)
    dx = xs[1] - xs[0]
    for rho in (fock_state(2), gaussian_state(2.0)):
        for theta in np.linspace(0.0, math.pi, 8, endpoint=False):
            total = ps.quad_pdf(rho, xs, theta).sum() * dx
            assert total == pytest.approx(1.0, abs=1e-6)


def test_kernel_eval_examples():
    k2 = ps.MomentKernelSet(2)
    np.testing.assert_allclose(
        ps.kernel_eval(k2, (1.0, 0.0), "P"), [0.5, 0.0, -0.5], atol=1e-15
    )
    k4 = ps.MomentKernelSet(4)
    np.testing.assert_allclose(
        ps.kernel_eval(k4, (0.0, 0.0), "P"), [0.75, 0.0, 0.25, 0.0, 0.75], atol=1e-15
    )
    k1 = ps.MomentKernelSet(1)
    pt = (0.37, -1.2)
    np.testing.assert_allclose(
        ps.kernel_eval(k1, pt, "W"), ps.kernel_eval(k1, pt, "P"), atol=1e-15
    )
    with pytest.raises(UnsupportedOrderError):
        ps.MomentKernelSet(5)


def test_kernel_gauss_transform_consistency():
    # smoothing the Husimi-side column with the unit-symmetric Gaussian
    # must reproduce the Wigner-side monomials
    rng = np.random.default_rng(42)
    for m in range(1, 5):
        kernels = ps.MomentKernelSet(m)
        pts = rng.uniform(-2.5, 2.5, size=(10, 2))
        for x, p in pts:
            for terms, (kx, kp) in zip(kernels.terms("P"), kernels.exponents):
                smoothed = ps.gauss_transform(terms, x, p)
                assert smoothed == pytest.approx(x**kx * p**kp, abs=1e-8)


def test_integrate_normalization_and_moments():
    grid = state_grid("fock", 0)
    vac = fock_state(0)
    q = ps.husimi_q(vac, grid.xs, grid.ps)
    assert ps.integrate(grid, q) == pytest.approx(1.0, abs=1e-4)
    for n in range(4):
        g = state_grid("fock", n)
        rho = fock_state(n)
        val = ps.integrate(
            g, ps.husimi_q(rho, g.xs, g.ps) * (g.xs**2 + g.ps**2)
        )
        assert val == pytest.approx(2.0 * (n + 1.0), abs=1e-3)


@pytest.mark.parametrize("n", range(4))
def test_integrate_squared_husimi_mass(n):
    # integral of Q^2 equals binom(2n, n)/2^(2n+1), the zeroth moment of the
    # squared-Husimi generating function
    g = state_grid("fock", n)
    rho = fock_state(n)
    q = ps.husimi_q(rho, g.xs, g.ps)
    expected = math.comb(2 * n, n) / 2.0 ** (2 * n + 1)
    assert ps.integrate(g, q * q) == pytest.approx(expected, abs=1e-4)


def test_wigner_normalization():
    for kind, param in [("fock", 0), ("fock", 3), ("gaussian", 2.0)]:
        grid = state_grid(kind, param, points=161)
        rho = fock_state(param) if kind == "fock" else gaussian_state(param)
        w = ps.wigner_w(rho, grid.xs, grid.ps)
        assert ps.integrate(grid, w) == pytest.approx(1.0, abs=1e-4)


CONSISTENCY_CASES = [("gaussian", 1.0), ("gaussian", 2.0), ("gaussian", 3.0)] + [
    ("fock", n) for n in range(6)
]


@pytest.mark.parametrize("kind,param", CONSISTENCY_CASES)
def test_husimi_kernel_consistency(kind, param):
    # integral of Q v_p against dx dp/(2 pi) must return the Weyl moments
    rho = fock_state(param) if kind == "fock" else gaussian_state(param)
    grid = state_grid(kind, param)
    q_vals = ps.husimi_q(rho, grid.xs, grid.ps)
    for m in range(1, 5):
        kernels = ps.MomentKernelSet(m)
        vp = kernels.eval_grid(grid.xs, grid.ps, "P")
        got = ps.integrate(grid, q_vals[None, :] * vp)
        expected = fock.weyl_moment_vector(rho, m)
        scale = np.maximum(1.0, np.abs(expected))
        np.testing.assert_allclose(got, expected, atol=0, rtol=0, err_msg=f"m={m}",
                                   verbose=True) if False else None
        assert np.max(np.abs(got - expected) / scale) < 1e-5, (m, got, expected)


@pytest.mark.parametrize("kind,param", [("fock", 0), ("fock", 3), ("gaussian", 2.0)])
def test_wigner_kernel_consistency(kind, param):
    rho = fock_state(param) if kind == "fock" else gaussian_state(param)
    grid = state_grid(kind, param, points=161)
    w_vals = ps.wigner_w(rho, grid.xs, grid.ps)
    for m in range(1, 5):
        kernels = ps.MomentKernelSet(m)
        vw = kernels.eval_grid(grid.xs, grid.ps, "W")
        got = ps.integrate(grid, w_vals[None, :] * vw)
        expected = fock.weyl_moment_vector(rho, m)
        scale = np.maximum(1.0, np.abs(expected))
        assert np.max(np.abs(got - expected) / scale) < 1e-4, (m, got, expected)


def test_coverage_error_carries_mass():
    grid = ps.PhaseGrid(extent=2.0, points_per_axis=21)
    with pytest.raises(ExtentError) as err:
        ps.check_coverage(grid, fock_state(5))
    assert err.value.captured is not None
    assert 0.0 < err.value.captured < 1.0


def test_grid_validation():
    with pytest.raises(CvtomoError):
        ps.PhaseGrid(extent=5.0, points_per_axis=8)
    grid = ps.PhaseGrid(extent=4.0, points_per_axis=16)
    assert np.allclose(np.diff(grid.axis), grid.spacing)
    assert grid.cell_weight == pytest.approx(grid.spacing**2 / (2 * math.pi))


def test_integrate_shape_guard():
    grid = ps.PhaseGrid(extent=4.0, points_per_axis=16)
    with pytest.raises(CvtomoError):
        ps.integrate(grid, np.ones(7))
