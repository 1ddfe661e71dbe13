# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the ramp-filtered backprojection kernel.

The kernel value at offset delta is the band-limited ramp filter
integral_{|k|<=kc} |k| exp(i k delta) dk
  = 2 [cos(kc delta) - 1 + kc delta sin(kc delta)] / delta^2,
with a series branch near delta = 0 where the closed form cancels badly.
"""

from libc.math cimport cos, sin


cdef inline double _ramp_value(double delta, double kc) nogil:
    cdef double z = kc * delta
    cdef double z2 = z * z
    if z2 < 1e-4:  # |z| < 1e-2
        return kc * kc * (1.0 - 0.25 * z2 + z2 * z2 / 72.0)
    return 2.0 * (cos(z) - 1.0 + z * sin(z)) / (delta * delta)


def ramp_eval(double[::1] delta, double kc, double[::1] out):
    cdef Py_ssize_t i
    for i in range(delta.shape[0]):
        out[i] = _ramp_value(delta[i], kc)


def project(double[::1] xi, double[:, ::1] comps, double[::1] xbins,
            double kc, double[:, ::1] out):
    """out[c, k] = sum_l comps[c, l] * ramp(xi[l] - xbins[k])."""
    cdef Py_ssize_t n_nodes = xi.shape[0]
    cdef Py_ssize_t n_comp = comps.shape[0]
    cdef Py_ssize_t n_x = xbins.shape[0]
    cdef Py_ssize_t l, k, c
    cdef double f
    for c in range(n_comp):
        for k in range(n_x):
            out[c, k] = 0.0
    with nogil:
        for l in range(n_nodes):
            for k in range(n_x):
                f = _ramp_value(xi[l] - xbins[k], kc)
                for c in range(n_comp):
                    out[c, k] += comps[c, l] * f


def project_abs(double[::1] xi, double[:, ::1] comps, double[::1] xbins,
                double kc, double[:, ::1] out):
    """Like ``project`` but accumulates |ramp| magnitudes."""
    cdef Py_ssize_t n_nodes = xi.shape[0]
    cdef Py_ssize_t n_comp = comps.shape[0]
    cdef Py_ssize_t n_x = xbins.shape[0]
    cdef Py_ssize_t l, k, c
    cdef double f
    for c in range(n_comp):
        for k in range(n_x):
            out[c, k] = 0.0
    with nogil:
        for l in range(n_nodes):
            for k in range(n_x):
                f = _ramp_value(xi[l] - xbins[k], kc)
                if f < 0.0:
                    f = -f
                for c in range(n_comp):
                    out[c, k] += comps[c, l] * f


def backproject(double[::1] xi, double[::1] xbins, double kc,
                double[::1] weights, double[::1] out, double[::1] out_abs):
    """out[l] = sum_k w[k] ramp(xi[l] - xbins[k]); out_abs uses |ramp|."""
    cdef Py_ssize_t n_nodes = xi.shape[0]
    cdef Py_ssize_t n_x = xbins.shape[0]
    cdef Py_ssize_t l, k
    cdef double f, acc, acc_abs
    with nogil:
        for l in range(n_nodes):
            acc = 0.0
            acc_abs = 0.0
            for k in range(n_x):
                f = _ramp_value(xi[l] - xbins[k], kc)
                acc += weights[k] * f
                acc_abs += weights[k] * (f if f >= 0.0 else -f)
            out[l] = acc
            out_abs[l] = acc_abs
