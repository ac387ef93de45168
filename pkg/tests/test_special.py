import json
import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirreg import _backend
from dirreg.composition import digamma, lgamma
from dirreg.errors import NonPositiveArgument

ORACLE = os.path.join(os.path.dirname(__file__), "fixtures", "gamma_oracle.json")
BACKENDS = sorted(_backend.available_backends().items())


def _oracle():
    with open(ORACLE) as fh:
        pts = json.load(fh)["points"]
    x = np.array([p["x"] for p in pts])
    return x, np.array([float(p["lgamma"]) for p in pts]), np.array([float(p["digamma"]) for p in pts])


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_lgamma_matches_oracle(name, impl):
    x, want, _ = _oracle()
    keep = (x >= 1e-3) & (x <= 1e6)
    got = impl.lgamma(x[keep])
    exact = want[keep] == 0.0
    assert np.all(got[exact] == 0.0)
    rel = np.abs(got[~exact] - want[keep][~exact]) / np.abs(want[keep][~exact])
    assert rel.max() <= 1e-12


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_digamma_matches_oracle(name, impl):
    x, _, want = _oracle()
    keep = (x >= 1e-3) & (x <= 1e6)
    assert np.abs(impl.digamma(x[keep]) - want[keep]).max() <= 1e-10


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_outside_tested_range_still_close(name, impl):
    x, lg, dg = _oracle()
    far = (x < 1e-3) | (x > 1e6)
    assert np.allclose(impl.lgamma(x[far]), lg[far], rtol=1e-12, atol=0)
    assert np.allclose(impl.digamma(x[far]), dg[far], rtol=1e-12, atol=0)


def test_known_values():
    assert lgamma(1.0) == 0.0
    assert lgamma(2.0) == 0.0
    assert lgamma(5.0) == pytest.approx(math.log(24.0), rel=1e-14)
    assert lgamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-14)
    assert digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-14)
    assert digamma(0.5) == pytest.approx(-0.5772156649015329 - 2 * math.log(2.0), abs=1e-13)


def test_scalar_in_scalar_out():
    assert isinstance(lgamma(3.0), float)
    assert isinstance(digamma(3.0), float)
    assert lgamma(np.array([3.0])).shape == (1,)


@pytest.mark.parametrize("bad", [0.0, -1.0, -0.5, float("nan")])
def test_nonpositive_rejected(bad):
    with pytest.raises(NonPositiveArgument):
        lgamma(bad)
    with pytest.raises(NonPositiveArgument):
        digamma(bad)


def test_agrees_with_math_lgamma():
    x = np.geomspace(1e-3, 1e6, 2001)
    ref = np.array([math.lgamma(v) for v in x])
    assert np.allclose(lgamma(x), ref, rtol=1e-12, atol=1e-14)


@given(st.floats(min_value=1e-3, max_value=1e5))
def test_recurrences(x):
    # Gamma(x + 1) = x Gamma(x) and psi(x + 1) = psi(x) + 1/x
    lhs = lgamma(x + 1.0)
    rhs = lgamma(x) + math.log(x)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
    d = digamma(x + 1.0) - digamma(x) - 1.0 / x
    assert abs(d) <= 1e-10 * max(1.0, 1.0 / x)


@given(st.floats(min_value=0.01, max_value=50.0))
def test_digamma_is_lgamma_derivative(x):
    h = 1e-5 * x
    fd = (lgamma(x + h) - lgamma(x - h)) / (2 * h)
    assert digamma(x) == pytest.approx(fd, rel=1e-6, abs=1e-6)
