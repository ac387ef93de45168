import numpy as np
import pytest

from dirreg.errors import InsufficientDraws
from dirreg.hmc.diagnostics import _rhat, compute_diagnostics, ess_bulk, split_rhat


def ar1(phi, m, n, seed):
    rng = np.random.default_rng(seed)
    x = np.empty((m, n))
    x[:, 0] = rng.normal(size=m) / np.sqrt(1 - phi ** 2)
    eps = rng.normal(size=(m, n))
    for t in range(1, n):
        x[:, t] = phi * x[:, t - 1] + eps[:, t]
    return x


def test_rhat_formula_by_hand():
    x = np.array([[1.0, 2.0, 3.0, 4.0], [2.0, 3.0, 4.0, 7.0]])
    n = 4
    W = np.mean([np.var(r, ddof=1) for r in x])
    B = n * np.var(x.mean(axis=1), ddof=1)
    want = np.sqrt(((n - 1) / n * W + B / n) / W)
    assert _rhat(x) == pytest.approx(want, rel=1e-14)


def test_rhat_near_one_for_iid():
    x = np.random.default_rng(0).normal(size=(4, 1000))
    assert 0.995 < split_rhat(x) < 1.01


def test_rhat_detects_shifted_chain():
    x = np.random.default_rng(1).normal(size=(4, 1000))
    x[0] += 1.0
    assert split_rhat(x) > 1.05


def test_rhat_detects_trend_within_chains():
    # splitting catches chains that drift even when their overall means agree
    x = np.tile(np.linspace(-2, 2, 1000), (4, 1)) + np.random.default_rng(2).normal(0, 0.1, (4, 1000))
    assert split_rhat(x) > 1.5


def test_folded_rhat_detects_scale_mismatch():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(4, 2000))
    x[0] *= 3.0
    assert split_rhat(x) > 1.05


def test_ess_iid_near_draw_count():
    x = np.random.default_rng(4).normal(size=(4, 2500))
    assert ess_bulk(x) == pytest.approx(10000, rel=0.1)


@pytest.mark.parametrize("phi", [0.5, 0.9])
def test_ess_ar1_matches_theory(phi):
    x = ar1(phi, 4, 20000, seed=5)
    want = x.size * (1 - phi) / (1 + phi)
    assert ess_bulk(x) == pytest.approx(want, rel=0.15)


def test_ess_antithetic_exceeds_draw_count():
    x = ar1(-0.5, 4, 5000, seed=6)
    assert ess_bulk(x) > x.size


def test_constant_input():
    x = np.full((4, 100), 2.5)
    assert split_rhat(x) == 1.0
    assert ess_bulk(x) == 400.0
    d = compute_diagnostics(np.c_[np.zeros(400), np.random.default_rng(0).normal(size=400)],
                            np.repeat(np.arange(4), 100), 0)
    assert d.zero_variance.tolist() == [True, False]


@pytest.mark.parametrize("shape", [(1, 100), (4, 3), (100,)])
def test_insufficient_draws(shape):
    with pytest.raises(InsufficientDraws):
        split_rhat(np.zeros(shape) + np.arange(np.prod(shape)).reshape(shape))


def test_single_chain_diagnostics_are_nan():
    d = compute_diagnostics(np.random.default_rng(0).normal(size=(100, 2)), np.zeros(100), 3)
    assert np.all(np.isnan(d.rhat)) and np.all(np.isnan(d.ess_bulk))
    assert d.divergences == 3
    out = d.to_dict(["a", "b"])
    assert set(out["rhat"]) == {"a", "b"}


def test_rank_invariance():
    # bulk ESS only sees ranks; the folded-tail part of R-hat is preserved by
    # increasing affine maps
    x = ar1(0.3, 4, 500, seed=7)
    assert ess_bulk(np.exp(x)) == pytest.approx(ess_bulk(x), rel=1e-12)
    assert split_rhat(3.0 * x - 7.0) == pytest.approx(split_rhat(x), rel=1e-12)
