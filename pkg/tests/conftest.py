"""Shared fixtures.

The expensive objects (parameter sweeps, the R* bracket, the full set of
shooting runs) are session-scoped so the property tests and the acceptance
suite share one computation instead of repeating multi-minute work.
"""

from __future__ import annotations

import numpy as np
import pytest

from lorenzlab import (
    Box,
    Interval,
    IntegratorConfig,
    EventSpec,
    Params,
    SeedConfig,
    TargetWord,
    branch_trajectory,
    build_geometry,
    certify_condition_b_segment,
    checkpoint_report,
    enclose_flow,
    equilibria,
    find_r_star,
    seed_unstable_branch,
    shoot_word,
    sweep_condition_a,
)

PARAMS_12 = Params(10.0, 1.0, 12.0)
PARAMS_1000 = Params(10.0, 1.0, 1000.0)
PARAMS_CLASSIC = Params(10.0, 8.0 / 3.0, 28.0)

# every word over {1, 3} of length 3, plus the two singletons
WORDS_LEN3 = ["".join(w) for w in
              (a + b + c for a in "13" for b in "13" for c in "13")]
ALL_TARGET_WORDS = ["1", "3"] + WORDS_LEN3


@pytest.fixture(scope="session")
def geometry12():
    return build_geometry(PARAMS_12)


@pytest.fixture(scope="session")
def sweep_10_1():
    grid = np.arange(7.5, 18.01, 0.5)
    return sweep_condition_a(10.0, 1.0, grid)


@pytest.fixture(scope="session")
def sweep_10_83():
    grid = np.arange(12.0, 49.01, 1.0)
    return sweep_condition_a(10.0, 8.0 / 3.0, grid)


@pytest.fixture(scope="session")
def r_star_10_1():
    return find_r_star(10.0, 1.0, (1.01, 1000.0), width_tol=1e-4)


@pytest.fixture(scope="session")
def branch12_horizon30():
    return branch_trajectory(
        PARAMS_12,
        t_max=30.0,
        events=[EventSpec("X_ZERO"), EventSpec("XPRIME_SIGN_CHANGE")],
    )


@pytest.fixture(scope="session")
def checkpoints_1000():
    return checkpoint_report(PARAMS_1000)


@pytest.fixture(scope="session")
def word_shoots(geometry12):
    """Shooting runs for every target word of length <= 3."""
    out = []
    for word in ALL_TARGET_WORDS:
        result = shoot_word(TargetWord.parse(word), PARAMS_12, geometry=geometry12)
        out.append((word, result))
    return out


@pytest.fixture(scope="session")
def p0_enclosure():
    start = Box.from_point_with_width(equilibria(PARAMS_12).p0, 5e-13)
    return enclose_flow(start, PARAMS_12, t_span=1.0, step=1e-3)


@pytest.fixture(scope="session")
def seed28_enclosure():
    seed = seed_unstable_branch(PARAMS_CLASSIC, SeedConfig())
    start = Box.from_point_with_width(seed, 5e-13)
    return enclose_flow(start, PARAMS_CLASSIC, t_span=2.0, step=1e-3)


@pytest.fixture(scope="session")
def certify_136():
    xi = Interval(13.6 - 5e-11, 13.6 + 5e-11)
    return certify_condition_b_segment(xi, PARAMS_12, back_span=0.05)
