"""Log-likelihood, log-posterior and analytic gradients over the free
parameter vector.

The normal prior normalizing constants are dropped: ``log_posterior`` equals
``log_likelihood - 0.5 * sum(beta^2) / sd_beta^2 - 0.5 * sum(gamma^2) / sd_theta^2``.
"""
from dataclasses import dataclass

import numpy as np

from . import _backend
from .composition import CompositionMatrix
from .errors import BoundaryY, DimensionMismatch, NonFiniteParameters
from .model import DesignMatrix, ModelSpec, n_free, unpack_free


@dataclass
class LogDensityResult:
    value: float
    gradient: np.ndarray = None


class EvalContext:
    """Immutable bundle of data and model configuration for evaluation.

    ``Y`` must already be interior (zero transform applied). ``X`` and ``Z``
    may be :class:`DesignMatrix` instances or plain arrays.
    """

    def __init__(self, Y, X, Z=None, spec=None):
        if not isinstance(Y, CompositionMatrix):
            Y = CompositionMatrix(Y)
        if not Y.interior:
            raise BoundaryY("response must be strictly inside the simplex; apply transform_zeros")
        self.Y = Y
        self.X = X if isinstance(X, DesignMatrix) else _plain_design(X, "x")
        if Z is None:
            Z = np.ones((Y.n, 1))
        self.Z = Z if isinstance(Z, DesignMatrix) else _plain_design(Z, "z")
        if self.X.n != Y.n or self.Z.n != Y.n:
            raise DimensionMismatch(
                f"row counts differ: Y {Y.n}, X {self.X.n}, Z {self.Z.n}")
        if spec is None:
            from .model import FormulaSpec
            spec = ModelSpec(FormulaSpec("Y"))
        self.spec = spec
        self.C = Y.C
        self.p = self.X.p
        self.q = self.Z.p
        self.reference = spec.ref_index(self.C)
        self.dim = n_free(self.C, self.p, self.q)
        self.log_y = np.log(Y.values)
        # Observations sharing a covariate pattern share mu, theta and alpha;
        # the likelihood only needs their count and summed log responses.
        XZ = np.hstack([self.X.values, self.Z.values])
        patterns, inverse = np.unique(XZ, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        self._Xv = np.ascontiguousarray(patterns[:, : self.p])
        self._Zv = np.ascontiguousarray(patterns[:, self.p:])
        self._weights = np.bincount(inverse, minlength=len(patterns)).astype(float)
        self._log_y_sum = np.zeros((len(patterns), self.C))
        np.add.at(self._log_y_sum, inverse, self.log_y)
        self._keep = np.array([c for c in range(self.C) if c != self.reference])
        nb = (self.C - 1) * self.p
        self._prior_prec = np.concatenate([
            np.full(nb, 1.0 / spec.prior_sd_beta ** 2),
            np.full(self.q, 1.0 / spec.prior_sd_theta ** 2),
        ])
        self._no_prior = np.zeros(self.dim)
        for arr in (self.log_y, self._Xv, self._Zv, self._weights,
                    self._log_y_sum, self._prior_prec, self._no_prior):
            arr.setflags(write=False)

    @property
    def n(self):
        return self.Y.n

    @property
    def n_patterns(self):
        return self._Xv.shape[0]

    def unpack(self, free):
        return unpack_free(free, self.C, self.p, self.q, self.reference)

    def subset(self, rows):
        """Context restricted to the given observation rows."""
        rows = np.atleast_1d(rows)
        Y = CompositionMatrix(self.Y.values[rows], self.Y.component_names)
        X = DesignMatrix(self.X.values[rows], self.X.column_names, self.X.encoding, self.X.terms)
        Z = DesignMatrix(self.Z.values[rows], self.Z.column_names, self.Z.encoding, self.Z.terms)
        return EvalContext(Y, X, Z, self.spec)

    def _check(self, free):
        free = np.asarray(free, dtype=float)
        if free.shape != (self.dim,):
            raise DimensionMismatch(f"free vector has shape {free.shape}, expected ({self.dim},)")
        return free

    def loglik_grad(self, free, need_grad=True):
        """(log-likelihood, gradient or None) at ``free``."""
        return _backend.free_logp_grad(
            self._check(free), self._Xv, self._Zv, self._log_y_sum, self._weights,
            self.reference, self._no_prior, need_grad)

    def logp_grad(self, free):
        """(log-posterior, gradient); the sampler's target."""
        return _backend.free_logp_grad(
            self._check(free), self._Xv, self._Zv, self._log_y_sum, self._weights,
            self.reference, self._prior_prec, True)

    def prior_penalty(self, free):
        free = np.asarray(free, dtype=float)
        return 0.5 * float(np.dot(self._prior_prec * free, free))


def _plain_design(values, prefix):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    names = ["(Intercept)"] + [f"{prefix}{j}" for j in range(1, values.shape[1])]
    return DesignMatrix(values, names)


def _finite(free):
    free = np.asarray(free, dtype=float)
    if not np.all(np.isfinite(free)):
        raise NonFiniteParameters("free parameters must be finite")
    return free


def log_likelihood(free, ctx):
    """Sum over observations of the Dirichlet log density at mu_i * theta_i."""
    return ctx.loglik_grad(_finite(free), need_grad=False)[0]


def log_posterior(free, ctx):
    return log_likelihood(free, ctx) - ctx.prior_penalty(free)


def grad_log_posterior(free, ctx):
    return ctx.logp_grad(_finite(free))[1]


def evaluate(free, ctx, gradient=True):
    """Log-posterior as a :class:`LogDensityResult`."""
    if gradient:
        value, grad = ctx.logp_grad(_finite(free))
        return LogDensityResult(value, grad)
    return LogDensityResult(log_posterior(free, ctx))
