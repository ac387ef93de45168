"""Compositional data containers and Dirichlet distribution math."""
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import (
    BoundaryY,
    DimensionError,
    DimensionMismatch,
    NegativeEntry,
    NonPositiveAlpha,
    NonPositiveArgument,
    ZeroRow,
)

ROW_SUM_ATOL = 1e-10
NORMALIZE_FLAG_TOL = 1e-8


@dataclass
class CompositionMatrix:
    """n x C matrix of proportions; each row is one observed composition."""

    values: np.ndarray
    component_names: list = None
    normalized: bool = False
    zeros_replaced: int = 0
    rows_with_zeros: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DimensionError("composition matrix must be 2-d")
        if self.values.shape[1] < 2:
            raise DimensionError(f"need at least 2 components, got {self.values.shape[1]}")
        if self.values.shape[0] < 1:
            raise DimensionError("need at least one observation")
        if self.component_names is None:
            self.component_names = [f"Y{c + 1}" for c in range(self.values.shape[1])]
        self.component_names = list(self.component_names)
        if len(self.component_names) != self.values.shape[1]:
            raise DimensionMismatch("component_names length does not match columns")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def C(self):
        return self.values.shape[1]

    @property
    def interior(self):
        v = self.values
        return bool(np.all((v > 0) & (v < 1)))


@dataclass(frozen=True)
class DirichletParams:
    alpha: np.ndarray = field(repr=True)

    def __post_init__(self):
        a = _check_alpha(self.alpha)
        object.__setattr__(self, "alpha", a)

    @property
    def alpha0(self):
        return float(self.alpha.sum())


def _check_alpha(alpha):
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise DimensionError("alpha must be a vector with at least 2 entries")
    if not np.all(a > 0) or not np.all(np.isfinite(a)):
        raise NonPositiveAlpha(f"all shape parameters must be positive and finite: {a}")
    return a


def validate_and_normalize(raw, component_names=None):
    """Divide each row by its sum.

    The returned matrix has ``normalized=True`` when any row sum was off by
    more than 1e-8 (the "normalization forced" situation).
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2:
        raise DimensionError("expected an n x C matrix")
    if raw.shape[1] < 2:
        raise DimensionError(f"need at least 2 components, got {raw.shape[1]}")
    if np.any(np.isnan(raw)):
        raise NegativeEntry("missing values in response")
    if np.any(raw < 0):
        r, c = np.argwhere(raw < 0)[0]
        raise NegativeEntry(f"negative entry {raw[r, c]} at row {r}, column {c}")
    sums = raw.sum(axis=1)
    if np.any(sums <= 0):
        raise ZeroRow(f"row {int(np.argmax(sums <= 0))} sums to zero")
    flag = bool(np.any(np.abs(sums - 1.0) > NORMALIZE_FLAG_TOL))
    return CompositionMatrix(raw / sums[:, None], component_names, normalized=flag)


def transform_zeros(m):
    """Replace rounded zeros by the (y (n-1) + 1/C) / n smoothing map.

    The map is applied to every entry of a row that contains a zero so the
    row still sums to one; zero-free rows are left untouched.
    """
    if not isinstance(m, CompositionMatrix):
        m = CompositionMatrix(m)
    y = m.values
    n, C = y.shape
    zero = y <= 0.0
    rows = zero.any(axis=1)
    out = y.copy()
    out[rows] = (y[rows] * (n - 1) + 1.0 / C) / n
    return CompositionMatrix(
        out,
        m.component_names,
        normalized=m.normalized,
        zeros_replaced=int(zero.sum()),
        rows_with_zeros=int(rows.sum()),
    )


def log_multinomial_beta(alpha):
    """log B(alpha) = sum lgamma(alpha_c) - lgamma(sum alpha_c)."""
    a = _check_alpha(alpha)
    return float(_backend.lgamma(a).sum() - _backend.lgamma(a.sum()))


def dirichlet_log_density(y, alpha):
    a = _check_alpha(alpha)
    y = np.asarray(y, dtype=float)
    if y.shape != a.shape:
        raise DimensionMismatch(f"y has shape {y.shape}, alpha has {a.shape}")
    if np.any(y <= 0) or np.any(y >= 1):
        raise BoundaryY("y must lie in the interior of the simplex")
    return float(-log_multinomial_beta(a) + ((a - 1.0) * np.log(y)).sum())


def dirichlet_mean(alpha):
    a = _check_alpha(alpha)
    return a / a.sum()


def dirichlet_sample(alpha, rng, size=None):
    """Draw from D(alpha) by normalizing independent Gamma(alpha_c, 1) variates.

    Draws that underflow to the boundary are redrawn so every returned
    composition is strictly interior.
    """
    a = _check_alpha(alpha)
    shape = (a.size,) if size is None else (size, a.size)
    g = rng.standard_gamma(np.broadcast_to(a, shape))
    out = g / g.sum(axis=-1, keepdims=True)
    bad = ~np.all((out > 0) & (out < 1), axis=-1)
    while np.any(bad):
        if size is None:
            g = rng.standard_gamma(a)
            out = g / g.sum()
            bad = ~np.all((out > 0) & (out < 1))
        else:
            idx = np.flatnonzero(bad)
            g = rng.standard_gamma(np.broadcast_to(a, (idx.size, a.size)))
            out[idx] = g / g.sum(axis=-1, keepdims=True)
            bad = ~np.all((out > 0) & (out < 1), axis=-1)
    return out


def lgamma(x):
    """Natural log of the Gamma function for x > 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise NonPositiveArgument("lgamma requires positive arguments")
    out = _backend.lgamma(arr)
    return float(out) if arr.ndim == 0 else out


def digamma(x):
    """Derivative of lgamma for x > 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise NonPositiveArgument("digamma requires positive arguments")
    out = _backend.digamma(arr)
    return float(out) if arr.ndim == 0 else out
