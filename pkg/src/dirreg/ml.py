"""Maximum likelihood / MAP estimation and Wald intervals."""
import logging
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import DegenerateData, MissingStdErrors
from .model import Coefficients, INTERCEPT

log = logging.getLogger(__name__)


class NonConvergence(UserWarning):
    pass


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    converged: bool
    message: str = ""


def _line_search(fg, x, f, g, d, c1=1e-4, c2=0.9, max_evals=60):
    """Weak Wolfe step by bracketing/bisection, starting from a unit step.

    Armijo failures shrink the step, curvature failures grow it. Returns
    ``None`` when no acceptable step was found.
    """
    gd = float(g @ d)
    # rounding slack so steps taken at the noise floor of f are not rejected
    slack = 1e-12 * max(1.0, abs(f))
    lo, hi, t = 0.0, np.inf, 1.0
    best = None
    for _ in range(max_evals):
        xn = x + t * d
        fn, gn = fg(xn)
        if not np.isfinite(fn) or fn > f + c1 * t * gd + slack:
            hi = t
        elif float(gn @ d) < c2 * gd:
            best = (t, xn, fn, gn)
            lo = t
        else:
            return t, xn, fn, gn
        t = 2.0 * lo if hi == np.inf else 0.5 * (lo + hi)
        if hi - lo < 1e-16 * max(1.0, lo):
            break
    return best


def lbfgs(fg, x0, max_iter=500, tol=1e-8, memory=10):
    """Minimize ``f`` with limited-memory BFGS.

    ``fg(x)`` returns ``(f, grad)``. Converged when ``max |grad| < tol``.
    """
    x = np.array(x0, dtype=float)
    f, g = fg(x)
    if not np.isfinite(f):
        return OptimResult(x, f, g, 0, False, "non-finite objective at start")
    S, Yh = deque(maxlen=memory), deque(maxlen=memory)
    it = 0
    while it < max_iter:
        if np.max(np.abs(g)) < tol:
            return OptimResult(x, f, g, it, True, "gradient tolerance reached")
        it += 1
        if S:
            q = g.copy()
            alphas = []
            for s, y in zip(reversed(S), reversed(Yh)):
                rho = 1.0 / float(y @ s)
                a = rho * float(s @ q)
                q -= a * y
                alphas.append((rho, a, s, y))
            s, y = S[-1], Yh[-1]
            q *= float(s @ y) / float(y @ y)
            for rho, a, s, y in reversed(alphas):
                b = rho * float(y @ q)
                q += (a - b) * s
            d = -q
        else:
            d = -g / max(1.0, float(np.linalg.norm(g)))
        if float(g @ d) >= 0:
            S.clear()
            Yh.clear()
            d = -g / max(1.0, float(np.linalg.norm(g)))
        step = _line_search(fg, x, f, g, d)
        if step is None:
            if S:
                S.clear()
                Yh.clear()
                continue
            return OptimResult(x, f, g, it, False, "line search failed")
        _, xn, fn, gn = step
        s, y = xn - x, gn - g
        if float(s @ y) > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            S.append(s)
            Yh.append(y)
        x, f, g = xn, fn, gn
    converged = bool(np.max(np.abs(g)) < tol)
    return OptimResult(x, f, g, it, converged, "maximum iterations reached")


def numerical_hessian(grad_fn, x, rel_step=1e-5):
    """Central-difference Hessian from an analytic gradient.

    Returns ``(symmetrized Hessian, relative asymmetry before symmetrizing)``.
    """
    x = np.asarray(x, dtype=float)
    k = x.size
    H = np.empty((k, k))
    for j in range(k):
        h = rel_step * max(1.0, abs(x[j]))
        e = np.zeros(k)
        e[j] = h
        H[:, j] = (grad_fn(x + e) - grad_fn(x - e)) / (2.0 * h)
    scale = max(np.max(np.abs(H)), 1e-300)
    asym = float(np.max(np.abs(H - H.T)) / scale)
    return 0.5 * (H + H.T), asym


@dataclass
class MLFit:
    coefficients: Coefficients
    free: np.ndarray
    log_likelihood_at_max: float
    std_errors: np.ndarray
    converged: bool
    iterations: int
    hessian_condition: float
    hessian_asymmetry: float = 0.0
    objective: str = "ml"
    component_names: list = field(default_factory=list)
    x_names: list = field(default_factory=list)
    z_names: list = field(default_factory=list)
    gradient_max_norm: float = np.nan
    diagnostic: str = ""


def _newton_polish(fg, hess_fn, x, f, g, tol, steps=5):
    # FD-Hessian Newton steps for when L-BFGS stalls at the rounding floor
    for _ in range(steps):
        if np.max(np.abs(g)) < tol:
            break
        H, _ = hess_fn(x)
        try:
            d = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if float(g @ d) >= 0:
            break
        xn = x + d
        fn, gn = fg(xn)
        if not np.isfinite(fn) or np.max(np.abs(gn)) >= np.max(np.abs(g)):
            break
        x, f, g = xn, fn, gn
    return x, f, g


def fit_ml(ctx, max_iter=500, tol=1e-8, n_starts=1, seed=0, objective="ml"):
    """Maximize the log-likelihood (``objective="ml"``) or log-posterior
    (``"map"``) from ``n_starts`` starting points.

    The first start is the zero vector; the others add N(0, 0.5^2) jitter
    drawn from ``seed``. Standard errors come from the numerical Hessian of
    the log-likelihood at the optimum and are withheld (NaN) when it is not
    negative definite.
    """
    if ctx.n < ctx.dim:
        raise DegenerateData(f"{ctx.n} observations for {ctx.dim} free parameters")
    if objective not in ("ml", "map"):
        raise ValueError(f"objective must be 'ml' or 'map', got {objective!r}")

    if objective == "ml":
        def fg(v):
            val, grad = ctx.loglik_grad(v)
            return -val, -grad
    else:
        def fg(v):
            val, grad = ctx.logp_grad(v)
            return -val, -grad

    def neg_hessian(v):
        return numerical_hessian(lambda u: fg(u)[1], v)

    rng = np.random.default_rng(seed)
    starts = [np.zeros(ctx.dim)]
    starts += [rng.normal(0.0, 0.5, ctx.dim) for _ in range(n_starts - 1)]
    best = None
    for x0 in starts:
        res = lbfgs(fg, x0, max_iter=max_iter, tol=tol)
        if best is None or res.fun < best.fun:
            best = res
    x, f, g = best.x, best.fun, best.grad
    converged = best.converged
    if not converged and np.isfinite(f):
        x, f, g = _newton_polish(fg, neg_hessian, x, f, g, tol)
        converged = bool(np.max(np.abs(g)) < tol)
    if not converged:
        warnings.warn(f"optimizer did not converge: {best.message}", NonConvergence)

    # Wald SEs always use the likelihood curvature
    def ll_grad(v):
        return -ctx.loglik_grad(v)[1]

    H, asym = numerical_hessian(ll_grad, x)
    eig = np.linalg.eigvalsh(H)
    diagnostic = ""
    if np.all(eig > 0):
        cov = np.linalg.inv(H)
        se = np.sqrt(np.diag(cov))
        cond = float(eig[-1] / eig[0])
    else:
        se = np.full(ctx.dim, np.nan)
        cond = np.inf
        diagnostic = "observed information not positive definite; standard errors withheld"
        log.warning(diagnostic)

    val = -f if objective == "ml" else ctx.loglik_grad(x, need_grad=False)[0]
    return MLFit(
        coefficients=ctx.unpack(x),
        free=x,
        log_likelihood_at_max=float(val),
        std_errors=se,
        converged=converged,
        iterations=best.iterations,
        hessian_condition=cond,
        hessian_asymmetry=asym,
        objective=objective,
        component_names=list(ctx.Y.component_names),
        x_names=list(ctx.X.column_names),
        z_names=list(ctx.Z.column_names),
        gradient_max_norm=float(np.max(np.abs(g))),
        diagnostic=diagnostic,
    )


def wald_intervals(fit, level=0.95):
    """Rows ``(name, lo, est, hi)`` for every coefficient.

    Reference-component rows are reported as fixed zeros.
    """
    if fit.std_errors is None or np.any(~np.isfinite(fit.std_errors)):
        raise MissingStdErrors(fit.diagnostic or "standard errors unavailable")
    if not 0 <= level < 1:
        raise ValueError("level must be in [0, 1)")
    z = float(ndtri(0.5 + level / 2.0))
    coeffs = fit.coefficients
    C, p = coeffs.beta.shape
    se_beta = np.zeros((C, p))
    keep = [c for c in range(C) if c != coeffs.reference]
    se_beta[keep] = fit.std_errors[: (C - 1) * p].reshape(C - 1, p)
    se_gamma = fit.std_errors[(C - 1) * p:]
    comps = fit.component_names or [f"Y{c + 1}" for c in range(C)]
    xn = fit.x_names or [INTERCEPT] + [f"x{j}" for j in range(1, p)]
    zn = fit.z_names or [INTERCEPT] + [f"z{j}" for j in range(1, coeffs.gamma.size)]
    rows = []
    for c in range(C):
        for j in range(p):
            est, se = coeffs.beta[c, j], se_beta[c, j]
            rows.append((f"{comps[c]}:{xn[j]}", est - z * se, est, est + z * se))
    for j, est in enumerate(coeffs.gamma):
        rows.append((f"gamma:{zn[j]}", est - z * se_gamma[j], est, est + z * se_gamma[j]))
    return rows
