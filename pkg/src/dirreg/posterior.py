"""Post-estimation on posterior draws.

Expected-value simplexes are computed draw by draw, so every component,
the reference one included, gets a full posterior sample; summaries are taken
afterwards, never by transforming summarized coefficients.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InsufficientSamples, NonPositiveEntry

QUANTILE_METHOD = "linear"  # inclusive linear interpolation (R type 7)


@dataclass
class ExpectedValueDraws:
    values: np.ndarray
    covariate_label: str = ""
    component_names: list = field(default_factory=list)


@dataclass
class SummaryRow:
    name: str
    mean: float
    q_low: float
    q_high: float


@dataclass
class SummaryTable:
    rows: list
    level: float
    panel: str = ""

    def as_dict(self):
        return {r.name: (r.mean, r.q_low, r.q_high) for r in self.rows}

    def names(self):
        return [r.name for r in self.rows]


def _free_matrix(draws):
    return draws.draws if hasattr(draws, "draws") else np.atleast_2d(np.asarray(draws, dtype=float))


def beta_draws(draws, C, p, q, reference):
    """S x C x p array of full coefficient matrices (reference rows zero)."""
    free = _free_matrix(draws)
    if free.shape[1] != (C - 1) * p + q:
        raise DimensionMismatch(f"draws have {free.shape[1]} columns, expected {(C - 1) * p + q}")
    out = np.zeros((free.shape[0], C, p))
    keep = [c for c in range(C) if c != reference]
    out[:, keep, :] = free[:, : (C - 1) * p].reshape(-1, C - 1, p)
    return out


def expected_values_per_draw(draws, x, C, q=1, reference=None, label="", component_names=None):
    """Mean simplex at covariate row ``x`` for every draw.

    ``draws`` is a :class:`PosteriorDraws` or an S x dim free-parameter
    matrix. The reference component's expected value is what remains of the
    unit total after the others, which the zero-row softmax produces
    directly.
    """
    x = np.asarray(x, dtype=float)
    p = x.size
    reference = C - 1 if reference is None else reference
    B = beta_draws(draws, C, p, q, reference)
    eta = B @ x
    eta -= eta.max(axis=1, keepdims=True)
    e = np.exp(eta)
    mu = e / e.sum(axis=1, keepdims=True)
    return ExpectedValueDraws(mu, label, list(component_names or []))


def renormalize_adjustment(raw_mu):
    """Divide each row by its sum (the post-hoc rescaling of sampled means
    used by penalized-likelihood approaches); kept for comparison only."""
    raw = np.atleast_2d(np.asarray(raw_mu, dtype=float))
    if np.any(~(raw > 0)):
        raise NonPositiveEntry("all entries must be positive")
    return raw / raw.sum(axis=1, keepdims=True)


def credible_interval(samples, level=0.95):
    """Central interval from empirical quantiles (linear interpolation
    between order statistics, inclusive of the extremes)."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise InsufficientSamples("need at least 2 samples")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    lo, hi = np.quantile(x, [(1 - level) / 2, (1 + level) / 2], method=QUANTILE_METHOD)
    return float(lo), float(hi)


def summarize_columns(samples, names, level=0.95, panel=""):
    samples = np.atleast_2d(samples)
    rows = []
    for j, name in enumerate(names):
        lo, hi = credible_interval(samples[:, j], level)
        rows.append(SummaryRow(name, float(samples[:, j].mean()), lo, hi))
    return SummaryTable(rows, level, panel)


def summarize_fit(draws, component_names, x_names, z_names, reference, level=0.95,
                  settings=None, panel="bayes"):
    """Coefficient summary in component-major order, reference rows as fixed
    zeros, then precision coefficients; optionally followed by expected
    values at named covariate rows (``settings``: label -> design row).
    """
    C, p, q = len(component_names), len(x_names), len(z_names)
    B = beta_draws(draws, C, p, q, reference)
    free = _free_matrix(draws)
    rows = []
    for c in range(C):
        for j in range(p):
            name = f"{component_names[c]}:{x_names[j]}"
            if c == reference:
                rows.append(SummaryRow(name, 0.0, 0.0, 0.0))
                continue
            s = B[:, c, j]
            lo, hi = credible_interval(s, level)
            rows.append(SummaryRow(name, float(s.mean()), lo, hi))
    for j in range(q):
        s = free[:, (C - 1) * p + j]
        lo, hi = credible_interval(s, level)
        rows.append(SummaryRow(f"gamma:{z_names[j]}", float(s.mean()), lo, hi))
    for label, x in (settings or {}).items():
        ev = expected_values_per_draw(free, x, C, q, reference)
        for c in range(C):
            s = ev.values[:, c]
            lo, hi = credible_interval(s, level)
            rows.append(SummaryRow(f"mu[{label}]:{component_names[c]}", float(s.mean()), lo, hi))
    return SummaryTable(rows, level, panel)
