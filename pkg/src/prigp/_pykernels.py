"""Pure-NumPy implementations of the kernel primitives.

Fallback backend used when the compiled ``prigp._ckernels`` extension is
unavailable (or when forced via ``PRIGP_BACKEND=py``).  Signatures and
semantics mirror the Cython module exactly; both are exercised by the tests.
"""

import numpy as np
from scipy.linalg import solve_triangular


def _sq_dists(A, B, inv_ls):
    # (len(A), len(B)) matrix of sum_j l_j^2 (a_j - b_j)^2
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("qnj,j->qn", diff * diff, inv_ls * inv_ls)


def ard_kernel_one(x, x2, signal_var, inv_ls):
    d = (np.asarray(x) - np.asarray(x2)) * inv_ls
    return float(signal_var * np.exp(-0.5 * np.dot(d, d)))


def ard_cross(X, x, signal_var, inv_ls):
    d = (X - x[None, :]) * inv_ls[None, :]
    return signal_var * np.exp(-0.5 * np.einsum("aj,aj->a", d, d))


def ard_cross_matrix(Xq, X, signal_var, inv_ls):
    return signal_var * np.exp(-0.5 * _sq_dists(Xq, X, inv_ls))


def ard_gram(X, signal_var, inv_ls, diag_add):
    K = signal_var * np.exp(-0.5 * _sq_dists(X, X, inv_ls))
    K[np.diag_indices_from(K)] = signal_var + diag_add
    return K


def posterior_mean_one(X, x, alpha, prior_value, signal_var, inv_ls):
    return float(prior_value + ard_cross(X, x, signal_var, inv_ls) @ alpha)


def posterior_var_raw_one(X, x, L, signal_var, inv_ls):
    k = ard_cross(X, x, signal_var, inv_ls)
    v = solve_triangular(L, k, lower=True)
    return float(signal_var - v @ v)
