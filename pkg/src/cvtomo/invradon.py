"""Band-limited inverse-Radon (filtered backprojection) primitives.

The regularized kernel R^{-1}(delta) = int_{|k|<=kc} |k| e^{i k delta} dk is
evaluated over outer differences between projected phase-space nodes and
voltage bins; that double loop dominates the runtime of everything
balanced-homodyne related.  A compiled extension is used when available and
a vectorized numpy fallback otherwise; `COMPILED_KERNEL` records the choice.
"""

import numpy as np

from . import _ramp_np

try:
    from . import _ramp as _impl

    COMPILED_KERNEL = True
except ImportError:  # pragma: no cover - depends on build environment
    _impl = _ramp_np
    COMPILED_KERNEL = False


def _as_c_double(arr):
    return np.ascontiguousarray(arr, dtype=float)


def ramp_kernel(delta, kc, backend=None):
    """Kernel values at offsets ``delta``; peak value kc^2 at delta = 0."""
    if kc <= 0:
        raise ValueError(f"frequency cutoff must be positive, got {kc}")
    delta = np.atleast_1d(_as_c_double(delta)).ravel()
    out = np.empty(delta.size)
    (backend or _impl).ramp_eval(delta, float(kc), out)
    return out


def project_components(xi, comps, xbins, kc, backend=None, use_abs=False):
    """Kernel-weighted sums of node components per bin.

    Returns out[c, k] = sum_l comps[c, l] R^{-1}(xi[l] - xbins[k]); xi are the
    phase-space nodes projected onto the quadrature axis.  With ``use_abs``
    the kernel magnitude |R^{-1}| is accumulated instead (stability checks).
    """
    xi = _as_c_double(xi)
    comps = np.ascontiguousarray(np.atleast_2d(comps), dtype=float)
    xbins = _as_c_double(xbins)
    out = np.empty((comps.shape[0], xbins.size))
    impl = backend or _impl
    if use_abs:
        impl.project_abs(xi, comps, xbins, float(kc), out)
    else:
        impl.project(xi, comps, xbins, float(kc), out)
    return out


def backproject_counts(xi, xbins, kc, weights, backend=None):
    """Backprojection of per-bin weights onto nodes.

    Returns (signed, magnitude) sums: signed[l] = sum_k w[k] R^{-1}(xi[l]-x_k)
    and magnitude[l] the same with |R^{-1}|, used for denominator stability
    checks.
    """
    xi = _as_c_double(xi)
    xbins = _as_c_double(xbins)
    weights = _as_c_double(weights)
    out = np.empty(xi.size)
    out_abs = np.empty(xi.size)
    (backend or _impl).backproject(xi, xbins, float(kc), weights, out, out_abs)
    return out, out_abs


def numpy_backend():
    """Expose the fallback explicitly (benchmarks, equivalence tests)."""
    return _ramp_np
