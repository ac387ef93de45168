"""Synthetic datasets shaped like the blood-sample application.

One binary factor ``Disease`` (levels A/B), C response components, constant
or covariate-dependent precision. Used by the ``simulate`` CLI command and
by the test suite so every statistical check is self-contained.
"""
import numpy as np

from .composition import CompositionMatrix, dirichlet_sample
from .model import DesignMatrix, INTERCEPT

# Point estimates printed for the four-component blood data (reference = last)
BLOOD_BETA = np.array([
    [0.63010700, -0.25191609],
    [0.06274025, -0.30952737],
    [-0.48628655, -0.18189666],
    [0.0, 0.0],
])
BLOOD_GAMMA = np.array([4.22272495])
BLOOD_COMPONENTS = ["Albumin", "Pre.Albumin", "Globulin.A", "Globulin.B"]


def binary_design(n, rng, p_b=0.5, name="Disease"):
    """Design (Intercept, DiseaseB) with a random A/B split."""
    labels = np.where(rng.random(n) < p_b, "B", "A")
    X = np.column_stack([np.ones(n), (labels == "B").astype(float)])
    return labels, DesignMatrix(X, [INTERCEPT, f"{name}B"], {name: ["A", "B"]}, (name,))


def simulate_responses(X, beta, Z, gamma, rng):
    """One Dirichlet draw per row of ``X`` under the mean/precision model."""
    X = np.atleast_2d(X)
    eta = X @ np.asarray(beta).T
    eta -= eta.max(axis=1, keepdims=True)
    mu = np.exp(eta)
    mu /= mu.sum(axis=1, keepdims=True)
    theta = np.exp(np.atleast_2d(Z) @ np.atleast_1d(gamma))
    return np.array([dirichlet_sample(mu[i] * theta[i], rng) for i in range(X.shape[0])])


def simulate_blood_like(n=30, beta=None, gamma=None, seed=0, varying_precision=False,
                        component_names=None):
    """Simulate a dataset; returns ``(data columns, CompositionMatrix, X, Z)``.

    Defaults reproduce the four-component blood-sample fit with theta = 68.
    With ``varying_precision`` the precision design equals the mean design
    and ``gamma`` must have one entry per design column.
    """
    beta = BLOOD_BETA if beta is None else np.asarray(beta, dtype=float)
    if gamma is None:
        gamma = np.array([np.log(68.0)])
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    C = beta.shape[0]
    if component_names is None:
        component_names = BLOOD_COMPONENTS if C == 4 else [f"Y{c + 1}" for c in range(C)]
    rng = np.random.default_rng(seed)
    labels, X = binary_design(n, rng)
    if varying_precision:
        Z = X
    else:
        Z = DesignMatrix(np.ones((n, 1)), [INTERCEPT])
    Y = simulate_responses(X.values, beta, Z.values, gamma, rng)
    data = {name: Y[:, c] for c, name in enumerate(component_names)}
    data["Disease"] = list(labels)
    return data, CompositionMatrix(Y, component_names), X, Z
