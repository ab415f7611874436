# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ARD-kernel primitives (hot path of every prediction).

Semantics must stay in lockstep with ``prigp._pykernels``; the test suite
cross-checks both backends on random inputs.  The kernel convention puts the
per-dimension factor ``l_j`` as a *multiplier* of the squared distance
(inverse lengthscale):

    kappa(x, x') = signal_var * exp(-0.5 * sum_j l_j^2 (x_j - x'_j)^2)
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


cdef inline double _kval(const double[:, ::1] X, Py_ssize_t a,
                         const double[::1] x, double signal_var,
                         const double[::1] inv_ls) noexcept nogil:
    cdef Py_ssize_t j
    cdef double s = 0.0, d
    for j in range(x.shape[0]):
        d = (X[a, j] - x[j]) * inv_ls[j]
        s += d * d
    return signal_var * exp(-0.5 * s)


def ard_kernel_one(const double[::1] x, const double[::1] x2,
                   double signal_var, const double[::1] inv_ls):
    """Scalar kernel value kappa(x, x2)."""
    cdef Py_ssize_t j
    cdef double s = 0.0, d
    for j in range(x.shape[0]):
        d = (x[j] - x2[j]) * inv_ls[j]
        s += d * d
    return signal_var * exp(-0.5 * s)


def ard_cross(const double[:, ::1] X, const double[::1] x,
              double signal_var, const double[::1] inv_ls):
    """Cross-covariance vector [kappa(x_a, x)]_a for the N rows of ``X``."""
    cdef Py_ssize_t n = X.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t a
    for a in range(n):
        out[a] = _kval(X, a, x, signal_var, inv_ls)
    return out_arr


def ard_cross_matrix(const double[:, ::1] Xq, const double[:, ::1] X,
                     double signal_var, const double[::1] inv_ls):
    """Cross-covariance matrix of shape (len(Xq), len(X))."""
    cdef Py_ssize_t nq = Xq.shape[0], n = X.shape[0], m = X.shape[1]
    out_arr = np.empty((nq, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t q, a, j
    cdef double s, d
    for q in range(nq):
        for a in range(n):
            s = 0.0
            for j in range(m):
                d = (Xq[q, j] - X[a, j]) * inv_ls[j]
                s += d * d
            out[q, a] = signal_var * exp(-0.5 * s)
    return out_arr


def ard_gram(const double[:, ::1] X, double signal_var,
             const double[::1] inv_ls, double diag_add):
    """Symmetric kernel matrix over ``X`` with ``diag_add`` on the diagonal."""
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t a, b, j
    cdef double s, d
    for a in range(n):
        out[a, a] = signal_var + diag_add
        for b in range(a + 1, n):
            s = 0.0
            for j in range(m):
                d = (X[a, j] - X[b, j]) * inv_ls[j]
                s += d * d
            s = signal_var * exp(-0.5 * s)
            out[a, b] = s
            out[b, a] = s
    return out_arr


def posterior_mean_one(const double[:, ::1] X, const double[::1] x,
                       const double[::1] alpha, double prior_value,
                       double signal_var, const double[::1] inv_ls):
    """Fused prior_value + kappa(x, X) . alpha without temporaries."""
    cdef Py_ssize_t n = X.shape[0]
    cdef double acc = prior_value
    cdef Py_ssize_t a
    for a in range(n):
        acc += _kval(X, a, x, signal_var, inv_ls) * alpha[a]
    return acc


def posterior_var_raw_one(const double[:, ::1] X, const double[::1] x,
                          const double[:, ::1] L, double signal_var,
                          const double[::1] inv_ls):
    """Raw (unclamped) posterior variance through the lower factor ``L``.

    Computes kappa(x,x) - ||v||^2 with L v = kappa(X, x) by forward
    substitution; clamping policy lives in the caller.
    """
    cdef Py_ssize_t n = X.shape[0]
    buf_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] v = buf_arr
    cdef Py_ssize_t a, b
    cdef double acc, quad = 0.0
    for a in range(n):
        acc = _kval(X, a, x, signal_var, inv_ls)
        for b in range(a):
            acc -= L[a, b] * v[b]
        acc /= L[a, a]
        v[a] = acc
        quad += acc * acc
    return signal_var - quad
