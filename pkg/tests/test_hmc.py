import numpy as np
import pytest
from scipy import stats

from conftest import make_ctx
from dirreg.errors import AllChainsDiverged, NonFiniteGradient, NonFiniteInit
from dirreg.hmc import (
    DualAveraging,
    SamplerConfig,
    WindowedMetric,
    kinetic_energy,
    leapfrog,
    nuts_transition,
    run_chains,
    sample,
)
from dirreg.hmc.sampler import chain_seed_sequences


def std_normal(q):
    return -0.5 * float(q @ q), -q


SCALES = np.array([0.1, 1.0, 10.0])


def scaled_normal(q):
    z = q / SCALES
    return -0.5 * float(z @ z), -z / SCALES


def never_finite(q):
    return -np.inf, np.zeros_like(q)


def very_stiff(q):
    return -1e8 * float(q @ q), -2e8 * q


def test_leapfrog_reversibility():
    rng = np.random.default_rng(0)
    A = np.array([[2.0, 0.3], [0.3, 0.5]])
    grad = lambda q: -A @ q  # noqa: E731
    for _ in range(20):
        q, p = rng.normal(size=2), rng.normal(size=2)
        eps = rng.uniform(0.05, 0.5)
        q1, p1 = leapfrog(q, p, eps, grad)
        q2, p2 = leapfrog(q1, p1, -eps, grad)
        assert np.allclose(q2, q, atol=1e-12) and np.allclose(p2, p, atol=1e-12)
        # momentum flip form
        q3, p3 = leapfrog(q1, -p1, eps, grad)
        assert np.allclose(q3, q, atol=1e-12) and np.allclose(-p3, p, atol=1e-12)


def test_leapfrog_energy_error_is_second_order():
    q0, p0 = np.array([1.0, -0.5]), np.array([0.3, 0.8])
    H = lambda q, p: 0.5 * q @ q + kinetic_energy(p, np.ones(2))  # noqa: E731

    def err(eps):
        q, p = q0, p0
        for _ in range(int(round(1.0 / eps))):
            q, p = leapfrog(q, p, eps, lambda x: -x)
        return abs(H(q, p) - H(q0, p0))

    ratio = err(0.1) / err(0.05)
    assert 3.0 < ratio < 5.0


def test_leapfrog_errors():
    with pytest.raises(NonFiniteGradient):
        leapfrog(np.zeros(2), np.zeros(2), 0.1, lambda q: np.full(2, np.nan))
    with pytest.raises(ValueError):
        leapfrog(np.zeros(2), np.zeros(2), 0.0, lambda q: -q)


def test_dual_averaging_reaches_target():
    # synthetic acceptance curve 1 / (1 + eps^2): target 0.8 at eps = 0.5
    da = DualAveraging(eps0=4.0, target=0.8)
    eps = 4.0
    for _ in range(3000):
        eps = da.update(1.0 / (1.0 + eps * eps))
    assert da.final_step_size == pytest.approx(0.5, rel=0.03)


def test_window_schedule_for_default_warmup():
    m = WindowedMetric(dim=1, warmup=1000)
    ends = [i for i in range(1000) if m.learn(np.array([float(i % 7)])) is not None]
    assert ends == [99, 149, 249, 449, 949]
    assert WindowedMetric.full_windowing(150) and not WindowedMetric.full_windowing(149)


def test_metric_regularization():
    m = WindowedMetric(dim=2, warmup=1000)
    rng = np.random.default_rng(1)
    draws = rng.normal(size=(100, 2)) * [1.0, 3.0]
    out = None
    for d in draws:
        out = m.learn(d) if out is None else out
    n = 25
    var = draws[75:100].var(axis=0, ddof=1)
    assert np.allclose(out, n / (n + 5) * var + 1e-3 * 5 / (n + 5))


def test_transition_preserves_standard_normal():
    # one transition from exact draws must leave the distribution unchanged
    rng = np.random.default_rng(42)
    out = np.empty((3000, 2))
    for i in range(out.shape[0]):
        q = rng.standard_normal(2)
        lp, g = std_normal(q)
        q, *_ = nuts_transition(q, lp, g, 0.9, np.ones(2), std_normal, rng, max_depth=6)
        out[i] = q
    for j in range(2):
        assert stats.kstest(out[:, j], "norm").pvalue > 1e-3


def test_transition_stats():
    rng = np.random.default_rng(0)
    q = np.zeros(3)
    lp, g = std_normal(q)
    _, _, _, st = nuts_transition(q, lp, g, 0.5, np.ones(3), std_normal, rng, max_depth=10)
    assert 0.0 <= st.accept_stat <= 1.0
    # depth counts completed doublings; a rejected final subtree adds steps
    assert 2 ** st.tree_depth - 1 <= st.n_leapfrog <= 2 ** (st.tree_depth + 1) - 1
    assert not st.divergent


def test_sampler_scaled_normal_adapts_metric():
    cfg = SamplerConfig(chains=2, iterations=1500, warmup=500, seed=3, target_accept=0.8)
    draws, diag = sample(scaled_normal, 3, cfg)
    assert np.allclose(draws.draws.std(axis=0), SCALES, rtol=0.1)
    assert np.all(np.abs(draws.draws.mean(axis=0)) < 0.15 * SCALES)
    # learned inverse metric tracks the variances
    assert np.allclose(draws.mass_diag.mean(axis=0), SCALES ** 2, rtol=0.35)
    assert diag.rhat.max() < 1.01
    assert draws.divergence_count.sum() == 0


def test_same_seed_same_draws():
    cfg = SamplerConfig(chains=2, iterations=300, warmup=150, seed=11)
    a, _ = sample(std_normal, 2, cfg)
    b, _ = sample(std_normal, 2, cfg)
    assert np.array_equal(a.draws, b.draws)
    c, _ = sample(std_normal, 2, SamplerConfig(chains=2, iterations=300, warmup=150, seed=12))
    assert not np.array_equal(a.draws, c.draws)


@pytest.mark.slow
def test_parallel_chains_match_serial():
    base = dict(chains=2, iterations=200, warmup=100, seed=5)
    a, _ = sample(std_normal, 2, SamplerConfig(**base))
    b, _ = sample(std_normal, 2, SamplerConfig(n_jobs=2, **base))
    assert np.array_equal(a.draws, b.draws)


def test_chain_streams_are_distinct():
    seqs = chain_seed_sequences(1, 4)
    states = {tuple(s.generate_state(4)) for s in seqs}
    assert len(states) == 4


def test_treedepth_saturation_counted():
    cfg = SamplerConfig(chains=2, iterations=120, warmup=20, max_treedepth=1, seed=1)
    draws, _ = sample(scaled_normal, 3, cfg)
    assert draws.treedepth_saturation_count.tolist() == [100, 100]


def test_warmup_zero_and_short_warmup():
    a, _ = sample(std_normal, 2, SamplerConfig(chains=2, iterations=50, warmup=0, seed=1))
    assert a.draws.shape == (100, 2)
    b, _ = sample(std_normal, 2, SamplerConfig(chains=2, iterations=150, warmup=100, seed=1))
    assert np.all(b.mass_diag == 1.0)


def test_init_failure():
    with pytest.raises(NonFiniteInit):
        sample(never_finite, 2, SamplerConfig(chains=1, iterations=10, warmup=5))


def test_all_chains_diverged():
    cfg = SamplerConfig(chains=2, iterations=20, warmup=0, seed=1)
    with pytest.raises(AllChainsDiverged):
        sample(very_stiff, 2, cfg)


@pytest.mark.parametrize("kwargs", [
    dict(chains=0), dict(warmup=2000), dict(target_accept=1.0), dict(max_treedepth=-1),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SamplerConfig(**kwargs)


def test_regression_posterior_close_to_ml():
    from dirreg.ml import fit_ml

    ctx = make_ctx(n=300, seed=2)
    draws, diag = run_chains(ctx, SamplerConfig(chains=2, iterations=800, warmup=400, seed=2))
    ml = fit_ml(ctx)
    assert np.all(np.abs(draws.draws.mean(axis=0) - ml.free) < 0.5 * ml.std_errors)
    assert draws.names[0] == "Albumin:(Intercept)"
    assert diag.rhat.max() < 1.02
