"""Hamiltonian Monte Carlo: leapfrog integration, NUTS transitions, warmup
adaptation and convergence diagnostics."""
from .adaptation import DualAveraging, WindowedMetric, find_reasonable_step_size
from .diagnostics import Diagnostics, compute_diagnostics, ess_bulk, split_rhat
from .integrator import kinetic_energy, leapfrog
from .nuts import TransitionStats, nuts_transition
from .sampler import PosteriorDraws, SamplerConfig, run_chains, sample, sample_chain

__all__ = [
    "DualAveraging", "WindowedMetric", "find_reasonable_step_size",
    "Diagnostics", "compute_diagnostics", "ess_bulk", "split_rhat",
    "kinetic_energy", "leapfrog", "TransitionStats", "nuts_transition",
    "PosteriorDraws", "SamplerConfig", "run_chains", "sample", "sample_chain",
]
