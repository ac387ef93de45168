"""No-U-Turn transitions with multinomial sampling inside the doubling tree.

The trajectory is extended by repeated doubling in a random direction.
Within a new subtree the proposal is drawn uniformly in proportion to
``exp(-H)``; when a subtree is merged into the existing trajectory the
proposal is taken with the biased progressive rule, favouring the newer
half. Doubling stops on the generalized U-turn criterion (checked on the
whole tree and on the two overlapping sub-trajectories that straddle the
merge point), on a divergence, or at ``max_depth``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .integrator import step

MAX_DELTA_H = 1000.0


@dataclass
class TransitionStats:
    accept_stat: float
    tree_depth: int
    n_leapfrog: int
    divergent: bool
    energy: float
    logp: float


class _Subtree:
    __slots__ = ("prop", "p_beg", "p_end", "ps_beg", "ps_end", "rho", "log_w")

    def __init__(self, prop, p_beg, p_end, ps_beg, ps_end, rho, log_w):
        self.prop = prop
        self.p_beg = p_beg
        self.p_end = p_end
        self.ps_beg = ps_beg
        self.ps_end = ps_end
        self.rho = rho
        self.log_w = log_w


def _no_uturn(ps_a, ps_b, rho):
    return ps_a.dot(rho) > 0.0 and ps_b.dot(rho) > 0.0


def _logaddexp(a, b):
    if a < b:
        a, b = b, a
    if b == -math.inf:
        return a
    return a + math.log1p(math.exp(b - a))


class _Trajectory:
    """Per-transition bookkeeping shared by the recursive tree builder."""

    def __init__(self, eps, inv_mass, logp_grad, H0, rng):
        self.eps = eps
        self.inv_mass = inv_mass
        self.logp_grad = logp_grad
        self.H0 = H0
        self.rng = rng
        self.n_leapfrog = 0
        self.sum_metro = 0.0
        self.divergent = False

    def build(self, depth, edge, direction):
        """Grow ``2**depth`` leapfrog steps from ``edge`` = (q, p, logp, grad).

        Returns ``(valid, new_edge, subtree)``.
        """
        if depth == 0:
            q, p, logp, grad = step(edge[0], edge[1], edge[3], direction * self.eps,
                                    self.inv_mass, self.logp_grad)
            self.n_leapfrog += 1
            ps = self.inv_mass * p
            H = -logp + 0.5 * float(p.dot(ps))
            if math.isnan(H):
                H = math.inf
            if H - self.H0 > MAX_DELTA_H:
                self.divergent = True
            log_w = self.H0 - H
            self.sum_metro += 1.0 if log_w > 0 else math.exp(log_w)
            sub = _Subtree((q, logp, grad), p, p, ps, ps, p.copy(), log_w)
            return not self.divergent, (q, p, logp, grad), sub

        valid, edge, left = self.build(depth - 1, edge, direction)
        if not valid:
            return False, edge, left
        valid, edge, right = self.build(depth - 1, edge, direction)
        if not valid:
            return False, edge, right

        log_w = _logaddexp(left.log_w, right.log_w)
        prop = left.prop
        if self.rng.random() < math.exp(right.log_w - log_w):
            prop = right.prop
        rho = left.rho + right.rho
        persist = (_no_uturn(left.ps_beg, right.ps_end, rho)
                   and _no_uturn(left.ps_beg, right.ps_beg, left.rho + right.p_beg)
                   and _no_uturn(left.ps_end, right.ps_end, right.rho + left.p_end))
        sub = _Subtree(prop, left.p_beg, right.p_end, left.ps_beg, right.ps_end, rho, log_w)
        return persist, edge, sub


def nuts_transition(q, logp, grad, eps, inv_mass, logp_grad, rng, max_depth=10):
    """One NUTS transition from ``q`` (with its log density and gradient).

    Returns ``(q_next, logp_next, grad_next, TransitionStats)``.
    """
    p0 = rng.standard_normal(q.size) / np.sqrt(inv_mass)
    H0 = -logp + 0.5 * float(p0.dot(inv_mass * p0))
    traj = _Trajectory(eps, inv_mass, logp_grad, H0, rng)

    fwd = bck = (q, p0, logp, grad)
    sample = (q, logp, grad)
    p_plus = p_minus = p0
    ps_plus = ps_minus = inv_mass * p0
    rho = p0.copy()
    log_w = 0.0
    depth = 0
    while depth < max_depth:
        forward = rng.random() > 0.5
        if forward:
            valid, fwd, sub = traj.build(depth, fwd, 1.0)
        else:
            valid, bck, sub = traj.build(depth, bck, -1.0)
        if not valid:
            break
        depth += 1

        if sub.log_w > log_w or rng.random() < math.exp(sub.log_w - log_w):
            sample = sub.prop
        log_w = _logaddexp(log_w, sub.log_w)

        rho_new = rho + sub.rho
        if forward:
            persist = (_no_uturn(ps_minus, sub.ps_end, rho_new)
                       and _no_uturn(ps_minus, sub.ps_beg, rho + sub.p_beg)
                       and _no_uturn(ps_plus, sub.ps_end, sub.rho + p_plus))
            p_plus, ps_plus = sub.p_end, sub.ps_end
        else:
            persist = (_no_uturn(sub.ps_end, ps_plus, rho_new)
                       and _no_uturn(sub.ps_beg, ps_plus, rho + sub.p_beg)
                       and _no_uturn(sub.ps_end, ps_minus, sub.rho + p_minus))
            p_minus, ps_minus = sub.p_end, sub.ps_end
        rho = rho_new
        if not persist:
            break

    n = traj.n_leapfrog
    accept = traj.sum_metro / n if n else 0.0
    q_next, logp_next, grad_next = sample
    stats = TransitionStats(accept, depth, n, traj.divergent, H0, logp_next)
    return q_next, logp_next, grad_next, stats
