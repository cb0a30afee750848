"""Adaptive integration, event detection, and trajectory exports."""

import csv
import json

import numpy as np
import pytest

from lorenzlab import (
    BLOW_UP,
    EventSpec,
    IntegratorConfig,
    OK,
    Params,
    TERMINAL_EVENT,
    branch_trajectory,
    build_geometry,
    integrate,
    locate_event,
    point_on_L,
    scan_scalar_crossings,
    state,
)

from conftest import PARAMS_12


@pytest.fixture(scope="module")
def mid_branch_start():
    """A point well away from both equilibria, scale ~10."""
    traj = branch_trajectory(PARAMS_12, t_max=6.0)
    return traj.evaluate(6.0)


def test_self_convergence_under_tolerance_halving(mid_branch_start):
    # halving both tolerances moves the terminal state by far less than
    # 100x the finer relative tolerance, out to the longest supported horizon
    finer = 5e-11
    for T in (10.0, 50.0):
        a = integrate(mid_branch_start, PARAMS_12, IntegratorConfig(t_max=T)).evaluate(T)
        b = integrate(
            mid_branch_start,
            PARAMS_12,
            IntegratorConfig(rel_tol=finer, abs_tol=5e-13, t_max=T),
        ).evaluate(T)
        assert np.max(np.abs(a - b)) < 100.0 * finer, T


def test_event_completeness_against_oversampling(branch12_horizon30):
    traj = branch12_horizon30
    recorded = {
        "X_ZERO": traj.event_times("X_ZERO", include_degenerate=True),
        "XPRIME_SIGN_CHANGE": traj.event_times("XPRIME_SIGN_CHANGE", include_degenerate=True),
    }
    fns = {
        "X_ZERO": lambda u: u[0],
        # x' = s (y - x): same zeros as y - x
        "XPRIME_SIGN_CHANGE": lambda u: u[1] - u[0],
    }
    missed = []
    ts = traj.ts
    for i in range(len(ts) - 1):
        sub = np.linspace(ts[i], ts[i + 1], 17)
        vals = {k: [fns[k](traj.evaluate(t)) for t in sub] for k in fns}
        for kind, v in vals.items():
            for j in range(16):
                if v[j] * v[j + 1] < 0.0:
                    a, b = sub[j], sub[j + 1]
                    pad = (b - a) * 1e-6 + 1e-12
                    if not any(a - pad <= te <= b + pad for te in recorded[kind]):
                        missed.append((kind, float(a), float(b)))
    assert not missed, missed


def test_recorded_events_lie_on_their_zero_sets(branch12_horizon30):
    traj = branch12_horizon30
    for e in traj.events:
        u = traj.evaluate(e.t)
        if e.kind == "X_ZERO":
            assert abs(u[0]) < 1e-8
        elif e.kind == "XPRIME_SIGN_CHANGE":
            assert abs(u[1] - u[0]) < 1e-8


def test_forward_backward_roundtrip_within_tolerance(mid_branch_start):
    """Forward T then backward T should return to the start within 1e-6.

    Backward integration re-expands along the directions the forward flow
    contracted (rates up to s+1+q near the equilibria), so the retrace error
    grows like e^{~11 T} times the tolerance floor.  Beyond T ~ 3 the
    backward leg peels off the forward path entirely and escapes the
    trapping ellipsoid, after which it blows up superexponentially; those
    spans are not even evaluable at bounded cost, so only short spans are
    exercised here.  The stated tolerance is not attainable: this test
    records the failure rather than widening the bound.
    """
    drifts = {}
    for T in (1.0, 2.0):
        fwd = integrate(mid_branch_start, PARAMS_12, IntegratorConfig(t_max=T))
        back = integrate(
            fwd.evaluate(T), PARAMS_12, IntegratorConfig(t_max=T, direction="backward")
        )
        assert back.status == OK
        drifts[T] = float(np.max(np.abs(back.evaluate(-T) - mid_branch_start)))
    bad = {T: d for T, d in drifts.items() if not d < 1e-6}
    assert not bad, f"roundtrip drift exceeds 1e-6: {bad}"


def test_roundtrip_drift_at_unit_span_stays_small(mid_branch_start):
    # regression pin for what the retrace actually achieves (measured 1.3e-5)
    T = 1.0
    fwd = integrate(mid_branch_start, PARAMS_12, IntegratorConfig(t_max=T))
    back = integrate(
        fwd.evaluate(T), PARAMS_12, IntegratorConfig(t_max=T, direction="backward")
    )
    drift = np.max(np.abs(back.evaluate(-T) - mid_branch_start))
    assert drift < 1e-4


def test_xprime_events_coincide_with_plane_crossings():
    p = PARAMS_12
    traj = branch_trajectory(
        p,
        t_max=20.0,
        events=[EventSpec("XPRIME_SIGN_CHANGE"), EventSpec("PLANE_XY_CROSS")],
    )
    xp = traj.event_times("XPRIME_SIGN_CHANGE")
    pl = traj.event_times("PLANE_XY_CROSS")
    for t in xp:
        u = traj.evaluate(t)
        factor = u[0] * (p.R - 1.0 - u[2])
        if abs(factor) > 1e-6:
            assert any(abs(t - t2) < 1e-8 for t2 in pl), t
    for t in pl:
        u = traj.evaluate(t)
        factor = u[0] * (p.R - 1.0 - u[2])
        if abs(factor) > 1e-6:
            assert any(abs(t - t2) < 1e-8 for t2 in xp), t


def test_terminal_event_stops_integration():
    traj = branch_trajectory(
        PARAMS_12,
        t_max=50.0,
        events=[EventSpec("X_ZERO", terminal_count=1)],
    )
    assert traj.status == TERMINAL_EVENT
    zeros = traj.event_times("X_ZERO")
    assert len(zeros) == 1
    assert abs(zeros[0] - 3.77957042711713) < 1e-8
    assert traj.t_end == pytest.approx(zeros[0], abs=1e-9)


def test_backward_escape_reports_blow_up():
    # the integrator must stop divergent runs with a BLOW_UP status rather
    # than hang or raise.  The z-axis is invariant (x = y = 0 stays so) and
    # z' = -qz, so backward time grows z exponentially with no rotation:
    # the guard is reached in a handful of large steps, unlike generic
    # escaping orbits whose rotation forces ~1e5 shrinking steps.
    start = state(0.0, 0.0, 1e6)
    traj = integrate(
        start, PARAMS_12, IntegratorConfig(t_max=10.0, direction="backward")
    )
    assert traj.status == BLOW_UP
    assert np.max(np.abs(traj.states[-1])) > 1e7
    assert traj.span()[0] > -10.0  # truncated before the requested horizon


def test_no_event_fires_at_the_initial_time():
    # segment starts sit exactly on the plane y = x, so x'(0) = 0 exactly;
    # the event machinery must not report a crossing at t = 0
    geom = build_geometry(PARAMS_12)
    u0 = point_on_L(0.5, geom)
    assert u0[0] == u0[1]
    traj = integrate(
        u0,
        PARAMS_12,
        IntegratorConfig(t_max=5.0),
        [EventSpec("XPRIME_SIGN_CHANGE"), EventSpec("X_ZERO")],
    )
    assert all(e.t > 1e-9 for e in traj.events)


def test_locate_event_bisection_contract(branch12_horizon30):
    traj = branch12_horizon30
    t1 = traj.event_times("X_ZERO")[0]
    fn = lambda t, u: u[0]
    t_star = locate_event(traj, t1 - 0.5, t1 + 0.5, fn)
    assert abs(t_star - t1) < 1e-9
    crossings = scan_scalar_crossings(traj, fn)
    assert any(abs(t - t1) < 1e-9 for t, _u, _d in crossings)


def test_evaluate_rejects_times_outside_span(branch12_horizon30):
    from lorenzlab import OutOfSpan

    with pytest.raises(OutOfSpan):
        branch12_horizon30.evaluate(-1.0)
    with pytest.raises(OutOfSpan):
        branch12_horizon30.evaluate(31.0)


def test_csv_export_round_trips_exact_floats(tmp_path, branch12_horizon30):
    traj = branch12_horizon30
    path = tmp_path / "run.csv"
    traj.export_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "y", "z"]
    assert len(rows) - 1 == len(traj.ts)
    for idx in (1, len(rows) - 1):
        t = float(rows[idx][0])
        u = np.array([float(v) for v in rows[idx][1:]])
        assert t == traj.ts[idx - 1]
        assert np.all(u == traj.states[idx - 1])


def test_events_jsonl_export(tmp_path, branch12_horizon30):
    traj = branch12_horizon30
    path = tmp_path / "run.events.jsonl"
    traj.export_events_jsonl(path)
    lines = [json.loads(l) for l in open(path)]
    assert len(lines) == len(traj.events)
    for rec, e in zip(lines, traj.events):
        assert rec["kind"] == e.kind
        assert rec["t"] == e.t
        assert rec["direction"] in (-1, 1)
        assert isinstance(rec["degenerate"], bool)


def test_max_step_is_respected():
    traj = integrate(
        state(1.0, 1.0, 1.0),
        PARAMS_12,
        IntegratorConfig(t_max=2.0, max_step=0.01),
    )
    assert np.max(np.diff(traj.ts)) <= 0.01 + 1e-12
