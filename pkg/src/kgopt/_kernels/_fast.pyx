# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of numpy_backend.

Same three entry points with the same semantics; hot loops are plain C.
The Cholesky factorization calls LAPACK's dpotrf directly. LAPACK sees
our C-ordered buffers column-major, so requesting the "U" factor there
yields exactly the row-major lower-triangular factor NumPy produces.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt
from scipy.linalg.cython_lapack cimport dpotrf

cnp.import_array()

name = "compiled"

cdef double SQRT5 = sqrt(5.0)
cdef double FIVE_THIRDS = 5.0 / 3.0
cdef double SIGMA2_FLOOR = 1e-300


cdef inline double _matern52_pair(const double[:, ::1] A, Py_ssize_t i,
                                  const double[:, ::1] B, Py_ssize_t j,
                                  const double[::1] theta, Py_ssize_t d) noexcept:
    cdef double l2 = 0.0
    cdef double diff, l
    cdef Py_ssize_t k
    for k in range(d):
        diff = A[i, k] - B[j, k]
        l2 += theta[k] * diff * diff
    l = sqrt(l2)
    return (1.0 + SQRT5 * l + FIVE_THIRDS * l2) * exp(-SQRT5 * l)


def cross_corr(const double[:, ::1] A, const double[:, ::1] B, const double[::1] theta):
    """Matern 5/2 correlation between the rows of A and the rows of B."""
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0], d = A.shape[1]
    out_arr = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    for i in range(na):
        for j in range(nb):
            out[i, j] = _matern52_pair(A, i, B, j, theta, d)
    return out_arr


def corr_matrix(const double[:, ::1] X, const double[::1] theta):
    """Matern 5/2 correlation among the rows of X. Unit diagonal."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(n):
        out[i, i] = 1.0
        for j in range(i + 1, n):
            v = _matern52_pair(X, i, X, j, theta, d)
            out[i, j] = v
            out[j, i] = v
    return out_arr


def nll_core(const double[:, ::1] X, const double[:, ::1] F, const double[::1] y,
             const double[::1] theta, double jitter0, double jitter_mult,
             double jitter_max):
    """Negative concentrated log-likelihood 0.5*(n*log(sigma2) + log|Psi|).

    Returns (value, jitter_used, ok) exactly like the NumPy backend.
    """
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], p = F.shape[1]
    cdef int ni = <int> n, info = 1
    psi_arr = np.empty((n, n), dtype=np.float64)
    work_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] psi = psi_arr
    cdef double[:, ::1] L = work_arr
    cdef Py_ssize_t i, j, k
    cdef double v, jitter, acc

    for i in range(n):
        psi[i, i] = 1.0
        for j in range(i + 1, n):
            v = _matern52_pair(X, i, X, j, theta, d)
            psi[i, j] = v
            psi[j, i] = v

    jitter = jitter0
    while jitter <= jitter_max:
        for i in range(n):
            for j in range(n):
                L[i, j] = psi[i, j]
            L[i, i] += jitter
        # C-ordered buffer looks transposed to LAPACK; "U" there is our
        # row-major lower factor
        dpotrf("U", &ni, &L[0, 0], &ni, &info)
        if info == 0:
            break
        jitter *= jitter_mult
    if info != 0:
        return np.inf, jitter, False

    cdef double logdet = 0.0
    for i in range(n):
        logdet += log(L[i, i])
    logdet *= 2.0

    Ft_arr = np.empty((n, p), dtype=np.float64)
    yt_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] Ft = Ft_arr
    cdef double[::1] yt = yt_arr
    for i in range(n):
        for j in range(p):
            acc = F[i, j]
            for k in range(i):
                acc -= L[i, k] * Ft[k, j]
            Ft[i, j] = acc / L[i, i]
        acc = y[i]
        for k in range(i):
            acc -= L[i, k] * yt[k]
        yt[i] = acc / L[i, i]

    # GLS through the tiny p x p normal equations
    M_arr = np.empty((p, p), dtype=np.float64)
    b_arr = np.empty(p, dtype=np.float64)
    alpha_arr = np.empty(p, dtype=np.float64)
    cdef double[:, ::1] M = M_arr
    cdef double[::1] b = b_arr
    cdef double[::1] alpha = alpha_arr
    for i in range(p):
        for j in range(i, p):
            acc = 0.0
            for k in range(n):
                acc += Ft[k, i] * Ft[k, j]
            M[i, j] = acc
            M[j, i] = acc
        acc = 0.0
        for k in range(n):
            acc += Ft[k, i] * yt[k]
        b[i] = acc
    # in-place Cholesky of M (lower), then two triangular solves
    for i in range(p):
        for j in range(i):
            acc = M[i, j]
            for k in range(j):
                acc -= M[i, k] * M[j, k]
            M[i, j] = acc / M[j, j]
        acc = M[i, i]
        for k in range(i):
            acc -= M[i, k] * M[i, k]
        if acc <= 0.0:
            return np.inf, jitter, False
        M[i, i] = sqrt(acc)
    for i in range(p):
        acc = b[i]
        for k in range(i):
            acc -= M[i, k] * alpha[k]
        alpha[i] = acc / M[i, i]
    for i in range(p - 1, -1, -1):
        acc = alpha[i]
        for k in range(i + 1, p):
            acc -= M[k, i] * alpha[k]
        alpha[i] = acc / M[i, i]

    cdef double sigma2 = 0.0
    for i in range(n):
        acc = yt[i]
        for j in range(p):
            acc -= Ft[i, j] * alpha[j]
        sigma2 += acc * acc
    sigma2 /= n
    if sigma2 < SIGMA2_FLOOR:
        sigma2 = SIGMA2_FLOOR
    return 0.5 * (n * log(sigma2) + logdet), jitter, True


def predict_core(const double[:, ::1] Xn, const double[::1] theta,
                 const double[:, ::1] L, const double[:, ::1] Ft,
                 const double[::1] alpha, const double[::1] gamma,
                 const double[:, ::1] G, double sigma2,
                 const double[::1] mx, const double[::1] xn):
    """Single-point prediction in normalized coordinates; see the NumPy
    backend for the algebra."""
    cdef Py_ssize_t n = Xn.shape[0], d = Xn.shape[1], p = Ft.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, l2, l, ri
    r_arr = np.empty(n, dtype=np.float64)
    t_arr = np.empty(n, dtype=np.float64)
    u_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] r = r_arr
    cdef double[::1] t = t_arr
    cdef double[::1] u = u_arr

    cdef double mean = 0.0
    for j in range(p):
        mean += mx[j] * alpha[j]
    for i in range(n):
        l2 = 0.0
        for k in range(d):
            diff = xn[k] - Xn[i, k]
            l2 += theta[k] * diff * diff
        l = sqrt(l2)
        ri = (1.0 + SQRT5 * l + FIVE_THIRDS * l2) * exp(-SQRT5 * l)
        r[i] = ri
        mean += ri * gamma[i]

    cdef double tt = 0.0
    for i in range(n):
        acc = r[i]
        for k in range(i):
            acc -= L[i, k] * t[k]
        acc /= L[i, i]
        t[i] = acc
        tt += acc * acc

    cdef double vv = 0.0
    for j in range(p):
        acc = mx[j]
        for i in range(n):
            acc -= Ft[i, j] * t[i]
        u[j] = acc
    for j in range(p):
        acc = u[j]
        for k in range(j):
            acc -= G[j, k] * u[k]
        acc /= G[j, j]
        u[j] = acc
        vv += acc * acc

    cdef double var = sigma2 * (1.0 - tt + vv)
    if var < 0.0:
        var = 0.0
    return mean, var
