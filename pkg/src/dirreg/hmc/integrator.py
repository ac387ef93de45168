"""Leapfrog integration with a diagonal metric.

Potential energy is the negative log density; ``inv_mass`` is the diagonal
of the inverse mass matrix (the posterior variance scale after adaptation),
so velocity is ``inv_mass * p``.
"""
import numpy as np

from ..errors import NonFiniteGradient


def kinetic_energy(p, inv_mass):
    return 0.5 * float(np.dot(p, inv_mass * p))


def step(q, p, grad, eps, inv_mass, logp_grad):
    """One leapfrog step from a state whose gradient is already known.

    Returns ``(q, p, logp, grad)`` at the new point; a non-finite log density
    or gradient is passed through for the caller to treat as divergent.
    """
    p_half = p + 0.5 * eps * grad
    q_new = q + eps * inv_mass * p_half
    logp, grad_new = logp_grad(q_new)
    p_new = p_half + 0.5 * eps * grad_new
    return q_new, p_new, logp, grad_new


def leapfrog(q, p, eps, grad_fn, inv_mass=None):
    """Single leapfrog step; ``grad_fn(q)`` returns the log-density gradient."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise ValueError("leapfrog requires finite position and momentum")
    if not eps > 0 and not eps < 0:
        raise ValueError("step size must be non-zero")
    inv_mass = np.ones_like(q) if inv_mass is None else np.asarray(inv_mass, dtype=float)
    g = np.asarray(grad_fn(q), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("non-finite gradient at start of step")
    p_half = p + 0.5 * eps * g
    q_new = q + eps * inv_mass * p_half
    g = np.asarray(grad_fn(q_new), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("non-finite gradient after position update")
    return q_new, p_half + 0.5 * eps * g
