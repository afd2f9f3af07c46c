"""Shared fixtures: the two reference runs reused across the suite.

Both runs use the gaussian-cosine family at Nx=128, Nv=256, Nt=100.  The
"theorem" run sits inside the guaranteed-contraction regime (large a, tiny
amplitude); the "exploratory" run uses order-one parameters where the field
is numerically visible and contraction is reported rather than guaranteed.
"""

from __future__ import annotations

import time
import warnings

import pytest

from vpme_scatter.asymptotic import ClassParameters, make_gaussian_cosine_datum
from vpme_scatter.diagnostics import instability_report
from vpme_scatter.scheme import RunSettings, default_horizon, run_iteration

# Order-one parameters: visible field, outside the contraction-guarantee regime.
EXPLORATORY_KLASS = ClassParameters(a=2.0, a1=2.7, a2=0.1, alpha=0.5, t0=0.7)
EXPLORATORY_AMPLITUDE = 0.05
EXPLORATORY_SIGMA = 1.0

# Contraction-guarantee regime: a = ceil(sqrt((200 a2 + 3)(e^6 + 1))) for a2 = 0.01,
# amplitude and width scaled so every class-membership bound passes.
THEOREM_KLASS = ClassParameters(a=45.0, a1=2.7, a2=0.01, alpha=0.5, t0=0.0)
THEOREM_AMPLITUDE = 1e-6
THEOREM_SIGMA = 16.0

# Wall-clock seconds of the shared reference runs, keyed by run name.
RUN_SECONDS: dict[str, float] = {}


@pytest.fixture(scope="session")
def exploratory_datum():
    return make_gaussian_cosine_datum(
        EXPLORATORY_AMPLITUDE, EXPLORATORY_SIGMA, EXPLORATORY_KLASS
    )


@pytest.fixture(scope="session")
def exploratory_settings():
    return RunSettings(nx=128, nv=256, nt=100, vmax=8.0, horizon=3.0, exploratory=True)


@pytest.fixture(scope="session")
def exploratory_run(exploratory_datum, exploratory_settings):
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        result = run_iteration(exploratory_datum, exploratory_settings)
    RUN_SECONDS["exploratory"] = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def theorem_datum():
    return make_gaussian_cosine_datum(THEOREM_AMPLITUDE, THEOREM_SIGMA, THEOREM_KLASS)


@pytest.fixture(scope="session")
def theorem_settings():
    return RunSettings(
        nx=128, nv=256, nt=100, horizon=default_horizon(THEOREM_KLASS)
    )


@pytest.fixture(scope="session")
def theorem_run(theorem_datum, theorem_settings):
    start = time.perf_counter()
    result = run_iteration(theorem_datum, theorem_settings)
    RUN_SECONDS["theorem"] = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def instability(exploratory_settings):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return instability_report(
            EXPLORATORY_AMPLITUDE,
            EXPLORATORY_SIGMA,
            EXPLORATORY_KLASS,
            exploratory_settings,
        )
