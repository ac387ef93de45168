"""Multi-chain NUTS driver with warmup adaptation."""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import AllChainsDiverged, NonFiniteInit
from .adaptation import DualAveraging, WindowedMetric, find_reasonable_step_size
from .diagnostics import compute_diagnostics
from .nuts import nuts_transition

log = logging.getLogger(__name__)

MAX_INIT_TRIES = 100


@dataclass
class SamplerConfig:
    chains: int = 4
    iterations: int = 2000
    warmup: int = 1000
    target_accept: float = 0.95
    max_treedepth: int = 20
    seed: int = 1
    init_radius: float = 2.0
    n_jobs: int = 1

    def __post_init__(self):
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if not 0 <= self.warmup < self.iterations:
            raise ValueError("warmup must satisfy 0 <= warmup < iterations")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must be in (0, 1)")
        if self.max_treedepth < 0:
            raise ValueError("max_treedepth must be >= 0")
        if self.init_radius < 0:
            raise ValueError("init_radius must be >= 0")


@dataclass
class ChainResult:
    draws: np.ndarray
    accept_stat: np.ndarray
    tree_depth: np.ndarray
    n_leapfrog: np.ndarray
    divergent: np.ndarray
    step_size: float
    inv_mass: np.ndarray
    warmup_accept_stat: np.ndarray
    warmup_divergences: int
    init: np.ndarray


@dataclass
class PosteriorDraws:
    """Post-warmup draws of the free parameters, all chains stacked."""

    draws: np.ndarray
    chain_ids: np.ndarray
    divergence_count: np.ndarray
    treedepth_saturation_count: np.ndarray
    step_sizes: np.ndarray
    mass_diag: np.ndarray
    accept_stat: np.ndarray = None
    tree_depth: np.ndarray = None
    names: list = field(default_factory=list)
    seed: int = None
    chain_seeds: list = field(default_factory=list)

    @property
    def S(self):
        return self.draws.shape[0]

    def chain(self, c):
        return self.draws[self.chain_ids == c]


def chain_seed_sequences(seed, chains):
    """Independent per-chain streams from one master seed."""
    return np.random.SeedSequence(seed).spawn(chains)


def _initialize(logp_grad, dim, radius, rng):
    for _ in range(MAX_INIT_TRIES):
        q = rng.uniform(-radius, radius, dim)
        logp, grad = logp_grad(q)
        if np.isfinite(logp) and np.all(np.isfinite(grad)):
            return q, logp, grad
    raise NonFiniteInit(f"no finite starting point after {MAX_INIT_TRIES} draws")


def sample_chain(logp_grad, dim, config, seed_seq, init=None):
    """Run one chain; ``logp_grad(q)`` returns ``(log density, gradient)``."""
    rng = np.random.default_rng(seed_seq)
    if init is None:
        q, logp, grad = _initialize(logp_grad, dim, config.init_radius, rng)
    else:
        q = np.asarray(init, dtype=float)
        logp, grad = logp_grad(q)
        if not np.isfinite(logp):
            raise NonFiniteInit("supplied initial point has non-finite log density")
    q0 = q.copy()
    inv_mass = np.ones(dim)
    W = config.warmup
    keep = config.iterations - W
    eps = 1.0
    if W > 0:
        eps = find_reasonable_step_size(q, logp, grad, eps, inv_mass, logp_grad, rng)
    da = DualAveraging(eps, target=config.target_accept)
    metric = WindowedMetric(dim, W) if WindowedMetric.full_windowing(W) else None

    draws = np.empty((keep, dim))
    accept = np.empty(keep)
    depth = np.empty(keep, dtype=int)
    nleap = np.empty(keep, dtype=int)
    div = np.zeros(keep, dtype=bool)
    warm_accept = np.empty(W)
    warm_div = 0

    for it in range(config.iterations):
        q, logp, grad, st = nuts_transition(
            q, logp, grad, eps, inv_mass, logp_grad, rng, config.max_treedepth)
        if it < W:
            warm_accept[it] = st.accept_stat
            warm_div += st.divergent
            eps = da.update(st.accept_stat)
            if metric is not None:
                new_inv_mass = metric.learn(q)
                if new_inv_mass is not None:
                    inv_mass = new_inv_mass
                    eps = find_reasonable_step_size(q, logp, grad, eps, inv_mass, logp_grad, rng)
                    da.restart(eps)
            if it == W - 1:
                eps = da.final_step_size
        else:
            k = it - W
            draws[k] = q
            accept[k] = st.accept_stat
            depth[k] = st.tree_depth
            nleap[k] = st.n_leapfrog
            div[k] = st.divergent
    return ChainResult(draws, accept, depth, nleap, div, eps, inv_mass,
                       warm_accept, warm_div, q0)


def _chain_job(args):
    logp_grad, dim, config, seed_seq = args
    return sample_chain(logp_grad, dim, config, seed_seq)


def sample(logp_grad, dim, config=None, names=None):
    """Sample an arbitrary differentiable log density.

    Chains use independent seed streams spawned from ``config.seed`` and
    are merged by chain index, so results do not depend on ``n_jobs``.
    Returns ``(PosteriorDraws, Diagnostics)``.
    """
    config = config or SamplerConfig()
    seqs = chain_seed_sequences(config.seed, config.chains)
    jobs = [(logp_grad, dim, config, s) for s in seqs]
    if config.n_jobs > 1 and config.chains > 1:
        with ProcessPoolExecutor(max_workers=min(config.n_jobs, config.chains)) as pool:
            results = list(pool.map(_chain_job, jobs))
    else:
        results = [_chain_job(j) for j in jobs]

    keep = config.iterations - config.warmup
    div_counts = np.array([int(r.divergent.sum()) for r in results])
    if keep > 0 and np.all(div_counts == keep):
        raise AllChainsDiverged("every post-warmup transition diverged in every chain")
    pd = PosteriorDraws(
        draws=np.vstack([r.draws for r in results]),
        chain_ids=np.repeat(np.arange(config.chains), keep),
        divergence_count=div_counts,
        treedepth_saturation_count=np.array(
            [int((r.tree_depth >= config.max_treedepth).sum()) for r in results]),
        step_sizes=np.array([r.step_size for r in results]),
        mass_diag=np.vstack([r.inv_mass for r in results]),
        accept_stat=np.concatenate([r.accept_stat for r in results]),
        tree_depth=np.concatenate([r.tree_depth for r in results]),
        names=list(names) if names else [f"p{i}" for i in range(dim)],
        seed=config.seed,
        chain_seeds=[int(s.generate_state(1)[0]) for s in seqs],
    )
    if div_counts.sum():
        log.warning("%d divergent transitions after warmup", int(div_counts.sum()))
    diag = compute_diagnostics(pd.draws, pd.chain_ids, int(div_counts.sum()))
    return pd, diag


def run_chains(ctx, config=None):
    """Sample the Dirichlet regression posterior of ``ctx``."""
    from ..model import free_names
    names = free_names(ctx.Y.component_names, ctx.X.column_names,
                       ctx.Z.column_names, ctx.reference)
    return sample(ctx.logp_grad, ctx.dim, config, names)
