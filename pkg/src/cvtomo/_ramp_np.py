"""Pure-numpy fallback for the ramp-filter kernel loops.

Mirrors the compiled module's semantics; chunked over nodes so the
(nodes x bins) kernel matrix never exceeds a few megabytes.
"""

import numpy as np

_CHUNK = 8192


def ramp_values(delta, kc):
    delta = np.asarray(delta, dtype=float)
    z = kc * delta
    z2 = z * z
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = 2.0 * (np.cos(z) - 1.0 + z * np.sin(z)) / (delta * delta)
    series = kc * kc * (1.0 - 0.25 * z2 + z2 * z2 / 72.0)
    return np.where(z2 < 1e-4, series, direct)


def ramp_eval(delta, kc, out):
    out[:] = ramp_values(delta, kc)


def project(xi, comps, xbins, kc, out):
    out[:] = 0.0
    for start in range(0, xi.size, _CHUNK):
        stop = start + _CHUNK
        kern = ramp_values(xi[start:stop, None] - xbins[None, :], kc)
        out += comps[:, start:stop] @ kern


def project_abs(xi, comps, xbins, kc, out):
    out[:] = 0.0
    for start in range(0, xi.size, _CHUNK):
        stop = start + _CHUNK
        kern = np.abs(ramp_values(xi[start:stop, None] - xbins[None, :], kc))
        out += comps[:, start:stop] @ kern


def backproject(xi, xbins, kc, weights, out, out_abs):
    for start in range(0, xi.size, _CHUNK):
        stop = start + _CHUNK
        kern = ramp_values(xi[start:stop, None] - xbins[None, :], kc)
        out[start:stop] = kern @ weights
        out_abs[start:stop] = np.abs(kern) @ weights
