"""Pure numpy implementations of the numerical kernels.

Used when the compiled ``_core`` extension is unavailable (or disabled with
``DIRREG_PURE_PYTHON=1``). The compiled module mirrors these functions one
for one; ``tests/test_backend.py`` checks that the two agree.
"""
import numpy as np

EULER_GAMMA = 0.5772156649015329

# zeta(k) for k = 2..40
_ZETA = np.array([
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
])
# Taylor coefficients of lgamma(1 + z) for z^2 .. z^40
_LG1_COEF = np.array([(-1.0) ** k * z / k for k, z in enumerate(_ZETA, start=2)])

# B_{2k} / (2k (2k - 1)), k = 1..8
_STIRLING = np.array([
    1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0,
])
# B_{2k} / (2k), k = 1..7
_PSI_ASYM = np.array([
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
])
_HALF_LOG_2PI = 0.9189385332046728
_ASYM_FROM = 10.0
_SERIES_RADIUS = 0.25


def _poly_tail(z, coef):
    # sum_k coef[k-2] * z**k for k >= 2, Horner form
    acc = np.zeros_like(z)
    for c in coef[::-1]:
        acc = (acc + c) * z
    return acc * z


def _lgamma1p_series(z):
    """lgamma(1 + z) for |z| <= 0.25."""
    return -EULER_GAMMA * z + _poly_tail(z, _LG1_COEF)


def _stirling(x):
    inv = 1.0 / x
    inv2 = inv * inv
    acc = np.zeros_like(x)
    for c in _STIRLING[::-1]:
        acc = acc * inv2 + c
    return (x - 0.5) * np.log(x) - x + _HALF_LOG_2PI + acc * inv


def lgamma(x):
    """Log-gamma for positive arguments (vectorized)."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    small = x < _SERIES_RADIUS
    near1 = np.abs(x - 1.0) <= _SERIES_RADIUS
    near2 = np.abs(x - 2.0) <= _SERIES_RADIUS
    big = x >= _ASYM_FROM
    mid = ~(small | near1 | near2 | big)

    if small.any():
        xs = x[small]
        out[small] = _lgamma1p_series(xs) - np.log(xs)
    if near1.any():
        out[near1] = _lgamma1p_series(x[near1] - 1.0)
    if near2.any():
        z = x[near2] - 2.0
        out[near2] = np.log1p(z) + _lgamma1p_series(z)
    if big.any():
        out[big] = _stirling(x[big])
    if mid.any():
        xm = x[mid].copy()
        prod = np.ones_like(xm)
        while True:
            low = xm < _ASYM_FROM
            if not low.any():
                break
            prod[low] *= xm[low]
            xm[low] += 1.0
        out[mid] = _stirling(xm) - np.log(prod)
    return out[0] if scalar else out


def digamma(x):
    """Digamma for positive arguments (vectorized)."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).copy()
    shift = np.zeros_like(x)
    while True:
        low = x < _ASYM_FROM
        if not low.any():
            break
        shift[low] += 1.0 / x[low]
        x[low] += 1.0
    inv2 = 1.0 / (x * x)
    acc = np.zeros_like(x)
    for c in _PSI_ASYM[::-1]:
        acc = acc * inv2 + c
    out = np.log(x) - 0.5 / x - acc * inv2 - shift
    return out[0] if scalar else out


def regression_logp_grad(X, Z, log_y_sum, weights, beta, gamma, need_grad=True):
    """Dirichlet regression log-likelihood and its gradient.

    Rows of ``X``/``Z`` are distinct covariate patterns; ``weights[k]`` counts
    the observations sharing pattern k and ``log_y_sum[k]`` is the sum of
    their log responses. ``beta`` is the full C x p coefficient matrix
    (reference row included), ``gamma`` the precision coefficients.

    Returns ``(value, d_beta, d_gamma)``; gradients are ``None`` when
    ``need_grad`` is false. An infeasible point (overflowing precision,
    underflowing shape) gives ``-inf`` and zero gradients.
    """
    eta = X @ beta.T
    eta -= eta.max(axis=1, keepdims=True)
    e = np.exp(eta)
    mu = e / e.sum(axis=1, keepdims=True)
    with np.errstate(over="ignore"):
        theta = np.exp(Z @ gamma)
    alpha = mu * theta[:, None]
    if not (np.all(np.isfinite(theta)) and np.all(alpha > 0.0)):
        if need_grad:
            return -np.inf, np.zeros_like(beta), np.zeros_like(gamma)
        return -np.inf, None, None

    w = weights
    value = (w @ lgamma(theta) - w @ lgamma(alpha.ravel()).reshape(alpha.shape).sum(axis=1)
             + ((alpha - 1.0) * log_y_sum).sum())
    if not need_grad:
        return value, None, None

    psi = digamma(alpha.ravel()).reshape(alpha.shape)
    G = log_y_sum - w[:, None] * (psi - digamma(theta)[:, None])
    aG = alpha * G
    # d/d eta_d = alpha_d * (G_d - sum_c mu_c G_c)
    d_eta = aG - alpha * (mu * G).sum(axis=1, keepdims=True)
    d_beta = d_eta.T @ X
    d_gamma = Z.T @ aG.sum(axis=1)
    return value, d_beta, d_gamma


def free_logp_grad(free, X, Z, log_y_sum, weights, reference, prior_prec, need_grad=True):
    """Log-likelihood minus ``0.5 * sum(prior_prec * free**2)`` and its
    gradient, for the packed free vector (non-reference beta rows row-major,
    then gamma). Returns ``(value, grad)``; ``grad`` is ``None`` when not
    requested. Non-finite parameters give ``-inf``.
    """
    free = np.asarray(free, dtype=float)
    C = log_y_sum.shape[1]
    p, q = X.shape[1], Z.shape[1]
    if not np.all(np.isfinite(free)):
        return -np.inf, np.zeros(free.size) if need_grad else None
    keep = [c for c in range(C) if c != reference]
    beta = np.zeros((C, p))
    beta[keep] = free[: (C - 1) * p].reshape(C - 1, p)
    value, d_beta, d_gamma = regression_logp_grad(
        X, Z, log_y_sum, weights, beta, free[(C - 1) * p:], need_grad)
    value = value - 0.5 * float(np.dot(prior_prec * free, free))
    if not need_grad:
        return value, None
    if not np.isfinite(value):
        return -np.inf, np.zeros(free.size)
    return value, np.concatenate([d_beta[keep].ravel(), d_gamma]) - prior_prec * free
