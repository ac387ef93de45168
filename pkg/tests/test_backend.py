import os
import subprocess
import sys

import numpy as np
import pytest

from dirreg import _backend, _fallback

compiled = _backend.available_backends().get("cython")
needs_core = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def _backend_in_subprocess(env_value):
    env = dict(os.environ)
    env.pop("DIRREG_PURE_PYTHON", None)
    if env_value is not None:
        env["DIRREG_PURE_PYTHON"] = env_value
    out = subprocess.run([sys.executable, "-c", "import dirreg; print(dirreg.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    return out.stdout.strip()


def test_env_var_forces_fallback():
    assert _backend_in_subprocess("1") == "python"


@needs_core
def test_compiled_is_default():
    assert _backend_in_subprocess(None) == "cython"


@needs_core
def test_special_functions_agree():
    x = np.geomspace(1e-6, 1e9, 5000)
    assert np.allclose(compiled.lgamma(x), _fallback.lgamma(x), rtol=1e-14, atol=1e-14)
    assert np.allclose(compiled.digamma(x), _fallback.digamma(x), rtol=1e-14, atol=1e-13)
    assert isinstance(compiled.lgamma(2.5), float)


@needs_core
@pytest.mark.parametrize("seed", range(5))
def test_regression_kernel_agrees(seed):
    rng = np.random.default_rng(seed)
    K, C, p, q = 7, 4, 3, 2
    X = np.column_stack([np.ones(K), rng.normal(size=(K, p - 1))])
    Z = np.column_stack([np.ones(K), rng.normal(size=(K, q - 1))])
    w = rng.integers(1, 5, K).astype(float)
    lys = np.log(rng.dirichlet(np.ones(C), size=K)) * w[:, None]
    beta = rng.normal(size=(C, p))
    beta[2] = 0.0
    gamma = rng.normal(size=q)
    a = compiled.regression_logp_grad(X, Z, lys, w, beta, gamma, True)
    b = _fallback.regression_logp_grad(X, Z, lys, w, beta, gamma, True)
    assert a[0] == pytest.approx(b[0], rel=1e-13)
    assert np.allclose(a[1], b[1], rtol=1e-11, atol=1e-12)
    assert np.allclose(a[2], b[2], rtol=1e-11, atol=1e-12)


@needs_core
def test_infeasible_point_agrees():
    X = np.ones((1, 1))
    lys = np.log([[0.5, 0.5]])
    w = np.ones(1)
    prec = np.zeros(2)
    for impl in (compiled, _fallback):
        val, grad = impl.free_logp_grad(np.array([0.0, 900.0]), X, X, lys, w, 1, prec, True)
        assert val == -np.inf and np.all(grad == 0.0)
        val, grad = impl.free_logp_grad(np.array([np.nan, 0.0]), X, X, lys, w, 1, prec, False)
        assert val == -np.inf and grad is None
