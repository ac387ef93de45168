# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: log-gamma, digamma and the Dirichlet regression
log-likelihood with its analytic gradient.

Same algorithms as ``dirreg._fallback``; that module is the reference.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, exp, fabs, isfinite, INFINITY
from libc.stdlib cimport malloc, free as free_mem

cnp.import_array()

cdef double EULER_GAMMA = 0.5772156649015329
cdef double HALF_LOG_2PI = 0.9189385332046728
cdef double ASYM_FROM = 10.0
cdef double SERIES_RADIUS = 0.25

cdef double[39] ZETA = [
    1.6449340668482264, 1.2020569031595942, 1.0823232337111381,
    1.03692775514337, 1.0173430619844492, 1.008349277381923,
    1.0040773561979444, 1.0020083928260821, 1.000994575127818,
    1.0004941886041194, 1.000246086553308, 1.0001227133475785,
    1.0000612481350588, 1.000030588236307, 1.0000152822594086,
    1.0000076371976379, 1.000003817293265, 1.0000019082127165,
    1.0000009539620338, 1.0000004769329869, 1.0000002384505027,
    1.000000119219926, 1.000000059608189, 1.0000000298035034,
    1.0000000149015549, 1.0000000074507118, 1.000000003725334,
    1.0000000018626598, 1.0000000009313275, 1.0000000004656628,
    1.000000000232831, 1.0000000001164155, 1.0000000000582077,
    1.0000000000291038, 1.000000000014552, 1.000000000007276,
    1.000000000003638, 1.000000000001819, 1.0000000000009095,
]
cdef double[39] LG1_COEF
cdef int _k
for _k in range(39):
    LG1_COEF[_k] = (1.0 if (_k + 2) % 2 == 0 else -1.0) * ZETA[_k] / (_k + 2)

cdef double[8] STIRLING = [
    1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0,
]
cdef double[7] PSI_ASYM = [
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
]


cdef inline double _lgamma1p_series(double z) nogil:
    cdef double acc = 0.0
    cdef int k
    for k in range(38, -1, -1):
        acc = (acc + LG1_COEF[k]) * z
    return -EULER_GAMMA * z + acc * z


cdef inline double _stirling(double x) nogil:
    cdef double inv = 1.0 / x
    cdef double inv2 = inv * inv
    cdef double acc = 0.0
    cdef int k
    for k in range(7, -1, -1):
        acc = acc * inv2 + STIRLING[k]
    return (x - 0.5) * log(x) - x + HALF_LOG_2PI + acc * inv


cdef double c_lgamma(double x) nogil:
    cdef double prod, z
    if x < SERIES_RADIUS:
        return _lgamma1p_series(x) - log(x)
    if fabs(x - 1.0) <= SERIES_RADIUS:
        return _lgamma1p_series(x - 1.0)
    if fabs(x - 2.0) <= SERIES_RADIUS:
        z = x - 2.0
        return log1p(z) + _lgamma1p_series(z)
    if x >= ASYM_FROM:
        return _stirling(x)
    prod = 1.0
    while x < ASYM_FROM:
        prod *= x
        x += 1.0
    return _stirling(x) - log(prod)


cdef double c_digamma(double x) nogil:
    cdef double shift = 0.0
    cdef double inv2, acc
    cdef int k
    while x < ASYM_FROM:
        shift += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    acc = 0.0
    for k in range(6, -1, -1):
        acc = acc * inv2 + PSI_ASYM[k]
    return log(x) - 0.5 / x - acc * inv2 - shift


def lgamma(x):
    """Log-gamma for positive arguments (vectorized)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return c_lgamma(<double>arr)
    flat = np.ascontiguousarray(arr).ravel()
    out = np.empty_like(flat)
    cdef const double[::1] src = flat
    cdef double[::1] dst = out
    cdef Py_ssize_t i
    for i in range(src.shape[0]):
        dst[i] = c_lgamma(src[i])
    return out.reshape(arr.shape)


def digamma(x):
    """Digamma for positive arguments (vectorized)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return c_digamma(<double>arr)
    flat = np.ascontiguousarray(arr).ravel()
    out = np.empty_like(flat)
    cdef const double[::1] src = flat
    cdef double[::1] dst = out
    cdef Py_ssize_t i
    for i in range(src.shape[0]):
        dst[i] = c_digamma(src[i])
    return out.reshape(arr.shape)


def regression_logp_grad(X, Z, log_y_sum, weights, beta, gamma, bint need_grad=True):
    """Dirichlet regression log-likelihood and its gradient.

    See ``dirreg._fallback.regression_logp_grad`` for the contract.
    """
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=float)
    cdef const double[:, ::1] Zv = np.ascontiguousarray(Z, dtype=float)
    cdef const double[:, ::1] Ly = np.ascontiguousarray(log_y_sum, dtype=float)
    cdef const double[::1] W = np.ascontiguousarray(weights, dtype=float)
    cdef const double[:, ::1] B = np.ascontiguousarray(beta, dtype=float)
    cdef const double[::1] G = np.ascontiguousarray(gamma, dtype=float)
    cdef Py_ssize_t n = Xv.shape[0], p = Xv.shape[1]
    cdef Py_ssize_t q = Zv.shape[1], C = B.shape[0]
    if Zv.shape[0] != n or Ly.shape[0] != n or Ly.shape[1] != C or W.shape[0] != n \
            or B.shape[1] != p or G.shape[0] != q:
        raise ValueError("kernel dimension mismatch")

    d_beta_arr = np.zeros((C, p))
    d_gamma_arr = np.zeros(q)
    cdef double[:, ::1] dB = d_beta_arr
    cdef double[::1] dG = d_gamma_arr
    eta_arr = np.empty(C)
    alpha_arr = np.empty(C)
    gvec_arr = np.empty(C)
    cdef double[::1] eta = eta_arr
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] gv = gvec_arr

    cdef Py_ssize_t i, c, j
    cdef double value = 0.0
    cdef double m, s, lin, theta, psi_theta, mug, dth, de, wi
    cdef bint feasible = True

    with nogil:
        for i in range(n):
            m = -INFINITY
            for c in range(C):
                s = 0.0
                for j in range(p):
                    s += Xv[i, j] * B[c, j]
                eta[c] = s
                if s > m:
                    m = s
            s = 0.0
            for c in range(C):
                eta[c] = exp(eta[c] - m)
                s += eta[c]
            lin = 0.0
            for j in range(q):
                lin += Zv[i, j] * G[j]
            theta = exp(lin)
            if not isfinite(theta) or theta <= 0.0:
                feasible = False
                break
            wi = W[i]
            value += wi * c_lgamma(theta)
            for c in range(C):
                alpha[c] = eta[c] / s * theta
                if not (alpha[c] > 0.0):
                    feasible = False
                    break
                value += (alpha[c] - 1.0) * Ly[i, c] - wi * c_lgamma(alpha[c])
            if not feasible:
                break
            if not need_grad:
                continue
            psi_theta = c_digamma(theta)
            mug = 0.0
            dth = 0.0
            for c in range(C):
                gv[c] = Ly[i, c] - wi * (c_digamma(alpha[c]) - psi_theta)
                mug += alpha[c] * gv[c]
                dth += alpha[c] * gv[c]
            mug /= theta
            for c in range(C):
                de = alpha[c] * (gv[c] - mug)
                for j in range(p):
                    dB[c, j] += de * Xv[i, j]
            for j in range(q):
                dG[j] += dth * Zv[i, j]

    if not feasible:
        if need_grad:
            return -np.inf, np.zeros((C, p)), np.zeros(q)
        return -np.inf, None, None
    if not need_grad:
        return value, None, None
    return value, d_beta_arr, d_gamma_arr


def free_logp_grad(const double[::1] free, const double[:, ::1] X, const double[:, ::1] Z,
                   const double[:, ::1] log_y_sum, const double[::1] weights,
                   Py_ssize_t reference, const double[::1] prior_prec, bint need_grad=True):
    """Log density (likelihood minus the quadratic prior penalty) and its
    gradient, taking the packed free-parameter vector directly.

    See ``dirreg._fallback.free_logp_grad``.
    """
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], q = Z.shape[1]
    cdef Py_ssize_t C = log_y_sum.shape[1]
    cdef Py_ssize_t dim = (C - 1) * p + q
    if free.shape[0] != dim or prior_prec.shape[0] != dim or Z.shape[0] != n \
            or log_y_sum.shape[0] != n or weights.shape[0] != n:
        raise ValueError("kernel dimension mismatch")
    if not 0 <= reference < C:
        raise ValueError("reference out of range")

    grad_arr = np.zeros(dim)
    cdef double[::1] grad = grad_arr
    cdef double* eta = <double*> malloc(3 * C * sizeof(double))
    if eta == NULL:
        raise MemoryError()
    cdef double* alpha = eta + C
    cdef double* gv = eta + 2 * C
    cdef Py_ssize_t i, c, j, row
    cdef Py_ssize_t gamma_off = (C - 1) * p
    cdef double value = 0.0
    cdef double m, s, lin, theta, psi_theta, mug, dth, de, wi, f
    cdef bint feasible = True

    with nogil:
        for j in range(dim):
            f = free[j]
            if not isfinite(f):
                feasible = False
            value -= 0.5 * prior_prec[j] * f * f
            grad[j] = -prior_prec[j] * f
        for i in range(n):
            if not feasible:
                break
            m = 0.0
            for c in range(C):
                s = 0.0
                if c != reference:
                    row = (c if c < reference else c - 1) * p
                    for j in range(p):
                        s += X[i, j] * free[row + j]
                eta[c] = s
                if s > m or c == 0:
                    m = s
            s = 0.0
            for c in range(C):
                eta[c] = exp(eta[c] - m)
                s += eta[c]
            lin = 0.0
            for j in range(q):
                lin += Z[i, j] * free[gamma_off + j]
            theta = exp(lin)
            if not isfinite(theta) or theta <= 0.0:
                feasible = False
                break
            wi = weights[i]
            value += wi * c_lgamma(theta)
            for c in range(C):
                alpha[c] = eta[c] / s * theta
                if not (alpha[c] > 0.0):
                    feasible = False
                    break
                value += (alpha[c] - 1.0) * log_y_sum[i, c] - wi * c_lgamma(alpha[c])
            if not feasible or not need_grad:
                continue
            psi_theta = c_digamma(theta)
            mug = 0.0
            for c in range(C):
                gv[c] = log_y_sum[i, c] - wi * (c_digamma(alpha[c]) - psi_theta)
                mug += alpha[c] * gv[c]
            dth = mug
            mug /= theta
            for c in range(C):
                if c == reference:
                    continue
                de = alpha[c] * (gv[c] - mug)
                row = (c if c < reference else c - 1) * p
                for j in range(p):
                    grad[row + j] += de * X[i, j]
            for j in range(q):
                grad[gamma_off + j] += dth * Z[i, j]
    free_mem(eta)

    if not feasible:
        return -np.inf, (np.zeros(dim) if need_grad else None)
    return value, (grad_arr if need_grad else None)
