import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dirreg.likelihood import EvalContext
from dirreg.model import FormulaSpec, ModelSpec
from dirreg.simulate import simulate_blood_like

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Filled by tests/test_acceptance.py, printed after the run.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, text in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:>2}: {status} - {text}")


def make_ctx(n=30, seed=0, beta=None, gamma=None, varying=False, reference=None,
             prior_sd_beta=5.0, prior_sd_theta=5.0):
    data, Y, X, Z = simulate_blood_like(n, beta=beta, gamma=gamma, seed=seed,
                                        varying_precision=varying)
    spec = ModelSpec(FormulaSpec("Y", ("Disease",), ("Disease",) if varying else ()),
                     reference, prior_sd_beta, prior_sd_theta)
    return EvalContext(Y, X, Z, spec)


@pytest.fixture
def blood_ctx():
    return make_ctx()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
