"""Formulas, design matrices and the mean/precision link functions.

Mean model: eta_i = B x_i with the reference row of B pinned to zero,
mu_i = softmax(eta_i). Precision model: theta_i = exp(z_i' gamma).
"""
import re
from dataclasses import dataclass, field

import numpy as np

from .composition import DirichletParams
from .errors import (
    DimensionMismatch,
    FormulaSyntaxError,
    MissingValue,
    NonFiniteInput,
    NonPositiveTheta,
    OverflowToInfinity,
    SingleLevelFactor,
    UnknownColumn,
)

INTERCEPT = "(Intercept)"
SOFTMAX_RANGE = 700.0

_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_.][A-Za-z0-9_.]*)|(?P<one>1)|(?P<op>[~+|]))")


@dataclass(frozen=True)
class FormulaSpec:
    """Parsed ``response ~ mean terms | precision terms`` formula.

    An empty ``precision_terms`` tuple means constant precision (``| 1``).
    """

    response: str
    mean_terms: tuple = ()
    precision_terms: tuple = ()

    @property
    def varying_precision(self):
        return len(self.precision_terms) > 0

    def __str__(self):
        rhs = " + ".join(self.mean_terms) or "1"
        prec = " + ".join(self.precision_terms) or "1"
        return f"{self.response} ~ {rhs} | {prec}"


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def parse_formula(text):
    """Parse ``ident ~ term (+ term)* (| term (+ term)* | | 1)?``.

    ``1`` on either side of ``|`` denotes the constant (intercept-only) part.
    """
    tokens = _tokenize(text)
    i = 0

    def expect(kind, value=None):
        nonlocal i
        k, v, p = tokens[i]
        if k != kind or (value is not None and v != value):
            want = value if value is not None else kind
            got = v if v else "end of formula"
            raise FormulaSyntaxError(f"expected {want!r}, got {got!r}", text, p)
        i += 1
        return v

    def side():
        nonlocal i
        terms = []
        while True:
            k, v, p = tokens[i]
            if k == "ident":
                if v in terms:
                    raise FormulaSyntaxError(f"duplicate term {v!r}", text, p)
                terms.append(v)
            elif k != "one":
                got = v if v else "end of formula"
                raise FormulaSyntaxError(f"expected a term, got {got!r}", text, p)
            i += 1
            if tokens[i][1] == "+":
                i += 1
                continue
            return tuple(terms)

    response = expect("ident")
    expect("op", "~")
    mean_terms = side()
    precision_terms = ()
    if tokens[i][1] == "|":
        i += 1
        precision_terms = side()
    k, v, p = tokens[i]
    if k != "end":
        raise FormulaSyntaxError(f"unexpected {v!r}", text, p)
    return FormulaSpec(response, mean_terms, precision_terms)


@dataclass
class DesignMatrix:
    values: np.ndarray
    column_names: list
    encoding: dict = field(default_factory=dict)
    terms: tuple = ()

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def row_for(self, settings):
        """Design row for one covariate setting, e.g. ``{"Disease": "B"}``.

        Numeric covariates missing from ``settings`` default to 0; factors
        default to their reference level.
        """
        row = [1.0]
        for term in self.terms:
            if term in self.encoding:
                levels = self.encoding[term]
                level = str(settings.get(term, levels[0]))
                if level not in levels:
                    raise UnknownColumn(f"level {level!r} not seen for factor {term!r}")
                row.extend(1.0 if level == lv else 0.0 for lv in levels[1:])
            else:
                row.append(float(settings.get(term, 0.0)))
        return np.array(row)


def is_missing(v):
    if v is None:
        return True
    if isinstance(v, str):
        return v.strip() == "" or v.strip().upper() == "NA"
    try:
        return bool(np.isnan(v))
    except TypeError:
        return False


def _as_numeric(col):
    try:
        return np.asarray(col, dtype=float)
    except (TypeError, ValueError):
        return None


def build_design_matrix(terms, data):
    """Intercept plus main effects for ``terms`` from a name -> column mapping.

    Numeric columns pass through; anything else is a factor, dummy-coded
    against its lexicographically first level.
    """
    if not data:
        raise UnknownColumn("empty data table")
    n = len(next(iter(data.values())))
    columns = [np.ones(n)]
    names = [INTERCEPT]
    encoding = {}
    for term in terms:
        if term not in data:
            raise UnknownColumn(f"unknown column {term!r}")
        col = list(data[term])
        if len(col) != n:
            raise DimensionMismatch(f"column {term!r} has {len(col)} rows, expected {n}")
        missing = [i for i, v in enumerate(col) if is_missing(v)]
        if missing:
            raise MissingValue(f"column {term!r} has missing values at rows {missing[:5]}")
        numeric = None if any(isinstance(v, (str, bool, np.bool_)) for v in col) else _as_numeric(col)
        if numeric is not None:
            columns.append(numeric)
            names.append(term)
            continue
        labels = [str(v) for v in col]
        levels = sorted(set(labels))
        if len(levels) < 2:
            raise SingleLevelFactor(f"factor {term!r} has a single level {levels[0]!r}")
        encoding[term] = levels
        for lv in levels[1:]:
            columns.append(np.array([1.0 if v == lv else 0.0 for v in labels]))
            names.append(f"{term}{lv}")
    return DesignMatrix(np.column_stack(columns), names, encoding, tuple(terms))


@dataclass
class ModelSpec:
    """Model configuration.

    ``reference`` is a 0-based component index; ``None`` selects the last
    component.
    """

    formula: FormulaSpec
    reference: int = None
    prior_sd_beta: float = 5.0
    prior_sd_theta: float = 5.0

    def __post_init__(self):
        if not (self.prior_sd_beta > 0 and self.prior_sd_theta > 0):
            raise ValueError("prior standard deviations must be positive")

    @property
    def varying_precision(self):
        return self.formula.varying_precision

    def ref_index(self, C):
        ref = C - 1 if self.reference is None else int(self.reference)
        if not 0 <= ref < C:
            raise ValueError(f"reference component {ref} out of range for C={C}")
        return ref


@dataclass
class Coefficients:
    """Mean coefficients ``beta`` (C x p, reference row zero) and precision
    coefficients ``gamma`` (length q)."""

    beta: np.ndarray
    gamma: np.ndarray
    reference: int

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if self.beta.ndim != 2:
            raise DimensionMismatch("beta must be a C x p matrix")
        if np.any(self.beta[self.reference] != 0.0):
            raise ValueError("reference row of beta must be exactly zero")

    @property
    def n_free(self):
        C, p = self.beta.shape
        return (C - 1) * p + self.gamma.size


def n_free(C, p, q):
    return (C - 1) * p + q


def pack_free(coeffs):
    """Flatten to the free parameter vector: non-reference beta rows in
    ascending component order (row-major), then gamma."""
    keep = [c for c in range(coeffs.beta.shape[0]) if c != coeffs.reference]
    return np.concatenate([coeffs.beta[keep].ravel(), coeffs.gamma])


def unpack_free(v, C, p, q, reference):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != n_free(C, p, q):
        raise DimensionMismatch(f"free vector has length {v.size}, expected {n_free(C, p, q)}")
    beta = np.zeros((C, p))
    keep = [c for c in range(C) if c != reference]
    beta[keep] = v[: (C - 1) * p].reshape(C - 1, p)
    return Coefficients(beta, v[(C - 1) * p:].copy(), reference)


def free_names(component_names, x_names, z_names, reference):
    names = [f"{comp}:{col}" for c, comp in enumerate(component_names)
             if c != reference for col in x_names]
    names += [f"gamma:{col}" for col in z_names]
    return names


def linear_predictors(X, coeffs):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    beta = coeffs.beta if isinstance(coeffs, Coefficients) else np.asarray(coeffs, dtype=float)
    if X.shape[1] != beta.shape[1]:
        raise DimensionMismatch(f"X has {X.shape[1]} columns, beta has {beta.shape[1]}")
    return X @ beta.T


def softmax(eta):
    """Row-wise softmax with max subtraction.

    Entries more than 700 below the row maximum would silently underflow to a
    zero mean and are rejected instead.
    """
    eta = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise NonFiniteInput("softmax input must be finite")
    shifted = eta - eta.max(axis=-1, keepdims=True)
    if np.any(shifted < -SOFTMAX_RANGE):
        raise OverflowToInfinity("linear predictor spread exceeds 700; mean would underflow")
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def precision_values(Z, gamma):
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if Z.shape[1] != gamma.size:
        raise DimensionMismatch(f"Z has {Z.shape[1]} columns, gamma has {gamma.size}")
    with np.errstate(over="ignore"):
        theta = np.exp(Z @ gamma)
    if not np.all(np.isfinite(theta)):
        raise OverflowToInfinity("precision overflowed")
    return theta


def alpha_from(mu, theta):
    if not (np.isfinite(theta) and theta > 0):
        raise NonPositiveTheta(f"precision must be positive, got {theta}")
    return DirichletParams(np.asarray(mu, dtype=float) * theta)
