"""Symbol extraction (zeros of x, sign changes of x') and branch classing."""

import numpy as np
import pytest

from lorenzlab import (
    ALL_POSITIVE,
    CROSSES_ZERO,
    EventSpec,
    MissingEvents,
    Params,
    UNDETERMINED,
    branch_trajectory,
    build_geometry,
    classify_branch,
    integrate,
    IntegratorConfig,
    point_on_L,
    summarize,
)

from conftest import PARAMS_12, PARAMS_CLASSIC


def _segment_run(alpha, n_zeros=5, rel_tol=1e-10, abs_tol=1e-12):
    geom = build_geometry(PARAMS_12)
    return integrate(
        point_on_L(alpha, geom),
        PARAMS_12,
        IntegratorConfig(t_max=120.0, rel_tol=rel_tol, abs_tol=abs_tol),
        [EventSpec("X_ZERO", terminal_count=n_zeros), EventSpec("XPRIME_SIGN_CHANGE")],
    )


def test_word_invariant_under_tolerance_halving(branch12_horizon30):
    base = summarize(branch12_horizon30)
    assert not base.degenerate
    halved = summarize(
        branch_trajectory(
            PARAMS_12,
            t_max=30.0,
            events=[EventSpec("X_ZERO"), EventSpec("XPRIME_SIGN_CHANGE")],
            rel_tol=5e-11,
            abs_tol=5e-13,
        )
    )
    assert halved.word == base.word
    assert len(halved.x_zeros) == len(base.x_zeros)
    assert halved.open_tail == base.open_tail


def test_word_invariant_under_tolerance_halving_on_segment_run():
    a = summarize(_segment_run(0.34))
    b = summarize(_segment_run(0.34, rel_tol=5e-11, abs_tol=5e-13))
    assert not a.degenerate and not b.degenerate
    assert a.word == b.word
    assert len(a.word) >= 2  # the run must actually complete intervals


@pytest.mark.parametrize("alpha", [0.05, 0.34, 0.6])
def test_taus_lie_strictly_inside_their_zero_intervals(alpha):
    s = summarize(_segment_run(alpha))
    zeros = s.x_zeros
    for i in range(len(s.word)):
        lo, hi = zeros[i], zeros[i + 1]
        inside = [tau for tau in s.xprime_changes if lo < tau < hi]
        on_edge = [tau for tau in s.xprime_changes if tau == lo or tau == hi]
        assert not on_edge
        assert len(inside) == s.sigma[i], (i, lo, hi, inside, s.sigma)


def test_taus_inside_intervals_on_chaotic_branch():
    traj = branch_trajectory(
        PARAMS_CLASSIC,
        t_max=30.0,
        events=[EventSpec("X_ZERO"), EventSpec("XPRIME_SIGN_CHANGE")],
    )
    s = summarize(traj)
    assert len(s.word) >= 3
    for i in range(len(s.word)):
        lo, hi = s.x_zeros[i], s.x_zeros[i + 1]
        inside = [tau for tau in s.xprime_changes if lo < tau < hi]
        assert len(inside) == s.sigma[i]


def test_open_tail_reported_separately_from_word(branch12_horizon30):
    # at R=12 the branch crosses x=0 once and then flips forever on the far
    # side: one zero, no completed interval, a flip-bearing open tail
    s = summarize(branch12_horizon30)
    assert len(s.x_zeros) == 1
    assert s.word == ()
    assert s.open_tail
    assert len(s.sigma) == 1
    assert s.sigma[0] > 0  # the tail count exists but never enters word


def test_flips_before_first_zero_counts_condition_a_prefix(branch12_horizon30):
    s = summarize(branch12_horizon30)
    assert s.flips_before_first_zero() == 1  # tau_1 < t_1 is the Lemma-style ordering


def test_classify_requires_zero_events():
    traj = integrate(
        np.array([1.0, 2.0, 3.0]), PARAMS_12, IntegratorConfig(t_max=1.0)
    )
    with pytest.raises(MissingEvents):
        classify_branch(traj, positivity_horizon=1.0)


def test_classify_branch_monotone_stable_in_horizon():
    # determined tags never flip as the horizon grows; only UNDETERMINED
    # resolves.  R=12 resolves to CROSSES_ZERO, R=5 to ALL_POSITIVE.
    for R, expected in ((12.0, CROSSES_ZERO), (5.0, ALL_POSITIVE)):
        p = Params(10.0, 1.0, R)
        seen = []
        for t_max in (2.0, 5.0, 15.0, 40.0):
            traj = branch_trajectory(
                p, t_max=t_max, events=[EventSpec("X_ZERO"), EventSpec("XPRIME_SIGN_CHANGE")]
            )
            seen.append(classify_branch(traj, positivity_horizon=t_max).tag)
        determined = [t for t in seen if t != UNDETERMINED]
        assert determined, (R, seen)
        assert set(determined) == {expected}, (R, seen)
        first = seen.index(determined[0])
        assert all(t == expected for t in seen[first:]), (R, seen)


def test_crosses_zero_reports_first_zero_and_flip_count(branch12_horizon30):
    c = classify_branch(branch12_horizon30, positivity_horizon=30.0)
    assert c.tag == CROSSES_ZERO
    assert abs(c.t1 - 3.77957042711713) < 1e-8
    assert c.flips_before_t1 == 1
