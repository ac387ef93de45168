"""Rank-normalized split-R-hat and bulk effective sample size."""
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from ..errors import InsufficientDraws


@dataclass
class Diagnostics:
    rhat: np.ndarray
    ess_bulk: np.ndarray
    divergences: int
    zero_variance: np.ndarray

    def to_dict(self, names=None):
        names = names or [f"p{i}" for i in range(len(self.rhat))]
        return {
            "divergences": int(self.divergences),
            "rhat": {n: float(v) for n, v in zip(names, self.rhat)},
            "ess_bulk": {n: float(v) for n, v in zip(names, self.ess_bulk)},
            "zero_variance": [n for n, z in zip(names, self.zero_variance) if z],
        }


def _check(chains):
    x = np.asarray(chains, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 4:
        raise InsufficientDraws("need at least 2 chains with at least 4 draws each")
    return x


def _split(x):
    half = x.shape[1] // 2
    return np.vstack([x[:, :half], x[:, x.shape[1] - half:]])


def _rank_normalize(x):
    r = rankdata(x, method="average").reshape(x.shape)
    return ndtri((r - 0.375) / (x.size + 0.25))


def _rhat(x):
    n = x.shape[1]
    within = x.var(axis=1, ddof=1).mean()
    between = n * x.mean(axis=1).var(ddof=1)
    var_hat = (n - 1) / n * within + between / n
    return float(np.sqrt(var_hat / within))


def _is_constant(x):
    return bool(np.all(x == x.flat[0]))


def split_rhat(chains):
    """Rank-normalized split R-hat: the larger of the bulk and folded-tail
    values. Constant input returns 1.0."""
    x = _check(chains)
    if _is_constant(x):
        return 1.0
    s = _split(x)
    bulk = _rhat(_rank_normalize(s))
    folded = np.abs(s - np.median(s))
    tail = _rhat(_rank_normalize(folded)) if not _is_constant(folded) else 1.0
    return max(bulk, tail)


def _autocov(x):
    n = x.shape[1]
    centered = x - x.mean(axis=1, keepdims=True)
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(centered, n=size, axis=1)
    return np.fft.irfft(f * np.conjugate(f), n=size, axis=1)[:, :n] / n


def _ess(x):
    m, n = x.shape
    acov = _autocov(x)
    mean_var = acov[:, 0].mean() * n / (n - 1)
    var_plus = mean_var * (n - 1) / n + x.mean(axis=1).var(ddof=1)
    rho = np.zeros(n)
    rho[0] = 1.0
    even = 1.0
    odd = 1.0 - (mean_var - acov[:, 1].mean()) / var_plus
    rho[1] = odd
    t = 1
    # Geyer initial positive sequence
    while t < n - 3 and even + odd > 0.0:
        even = 1.0 - (mean_var - acov[:, t + 1].mean()) / var_plus
        odd = 1.0 - (mean_var - acov[:, t + 2].mean()) / var_plus
        if even + odd >= 0.0:
            rho[t + 1] = even
            rho[t + 2] = odd
        t += 2
    max_t = t - 2
    if even > 0:
        rho[max_t + 1] = even
    # initial monotone sequence
    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]
        t += 2
    total = m * n
    tau = -1.0 + 2.0 * rho[: max_t + 1].sum() + rho[max_t + 1: max_t + 2].sum()
    tau = max(tau, 1.0 / np.log10(total))
    return float(total / tau)


def ess_bulk(chains):
    """Bulk effective sample size of rank-normalized split chains.

    Constant input returns the raw draw count.
    """
    x = _check(chains)
    if _is_constant(x):
        return float(x.size)
    return _ess(_rank_normalize(_split(x)))


def compute_diagnostics(draws, chain_ids, divergences):
    """Per-parameter diagnostics for an S x dim draw matrix."""
    draws = np.asarray(draws)
    ids = np.asarray(chain_ids)
    chains = [draws[ids == c] for c in np.unique(ids)]
    dim = draws.shape[1]
    # undefined for a single chain
    rhat = np.full(dim, np.nan)
    ess = np.full(dim, np.nan)
    zero = np.zeros(dim, dtype=bool)
    if len(chains) >= 2 and min(len(c) for c in chains) >= 4:
        n = min(len(c) for c in chains)
        for j in range(dim):
            x = np.stack([c[:n, j] for c in chains])
            zero[j] = _is_constant(x)
            rhat[j] = split_rhat(x)
            ess[j] = ess_bulk(x)
    return Diagnostics(rhat, ess, int(divergences), zero)
