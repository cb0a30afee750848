"""Adaptive time stepping with dense output and root-resolved event detection.

A trajectory is integrated step by step with an embedded Runge-Kutta pair
(order 8(5,3) by default, 5(4) optional); every accepted step keeps its dense
interpolant, so the result is a piecewise-polynomial curve that can be
evaluated anywhere in its span and scanned for sign changes of arbitrary
scalar functions.

Event handling contract:

* each accepted step is subsampled (32 points) and every sign change of every
  requested event function is refined by bisection to ``event_tol``;
* a sampled value of exactly zero inherits the previous nonzero sign, so a
  tangency that never flips the sign is not a crossing;
* nothing is reported at the initial time itself: a trajectory that starts on
  a section has no sign on the far side, hence no crossing;
* sign changes of x' are crossings of the plane y = x (x' = s(y - x)); each
  one carries the transversality factor x(R - 1 - z), and crossings with
  |factor| below ``tangency_tol`` are flagged degenerate and excluded from
  sign-change counts.

Integration halts at the horizon, at a designated terminal event, when the
state norm exceeds 1e8 (BLOW_UP), or when the accepted step underflows
(STEP_UNDERFLOW); the partial trajectory is always returned with its status.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, RK45

from .dynamics import Geometry, Params, ellipsoid_value, rhs

__all__ = [
    "IntegratorConfig",
    "EventSpec",
    "EventRecord",
    "Trajectory",
    "OutOfSpan",
    "NoSignChange",
    "integrate",
    "evaluate",
    "locate_event",
    "scan_scalar_crossings",
    "segment_distance",
    "OK",
    "TERMINAL_EVENT",
    "BLOW_UP",
    "STEP_UNDERFLOW",
]

OK = "OK"
TERMINAL_EVENT = "TERMINAL_EVENT"
BLOW_UP = "BLOW_UP"
STEP_UNDERFLOW = "STEP_UNDERFLOW"

BLOW_UP_NORM = 1e8
MIN_STEP = 1e-14
_SUBSAMPLES = 32

EVENT_KINDS = (
    "X_ZERO",
    "XPRIME_SIGN_CHANGE",
    "PLANE_XY_CROSS",
    "PLANE_Z_CROSS",
    "ELLIPSOID_EXIT",
    "SEGMENT_L_HIT",
)

_METHODS = {"dop853": DOP853, "rk45": RK45}


class OutOfSpan(ValueError):
    """Evaluation time lies outside the trajectory's time span."""


class NoSignChange(ValueError):
    """Root refinement was asked for a bracket with no sign change."""


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    t_max: float = 50.0
    direction: str = "forward"
    event_tol: float = 1e-12
    method: str = "dop853"

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.event_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.t_max <= 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"direction must be forward or backward, got {self.direction!r}")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {sorted(_METHODS)}, got {self.method!r}")

    @property
    def sign(self) -> int:
        return 1 if self.direction == "forward" else -1


@dataclass(frozen=True)
class EventSpec:
    """A named event function to track during integration.

    ``level`` applies to PLANE_Z_CROSS, ``tube_radius`` and ``geometry`` to
    SEGMENT_L_HIT, ``tangency_tol`` to XPRIME_SIGN_CHANGE.  A positive
    ``terminal_count`` stops the integration at the n-th occurrence.
    """

    kind: str
    level: float = 0.0
    tube_radius: float = 1e-6
    geometry: Geometry | None = None
    tangency_tol: float = 1e-9
    terminal_count: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind == "SEGMENT_L_HIT" and self.geometry is None:
            raise ValueError("SEGMENT_L_HIT requires a geometry")
        if self.terminal_count is not None and self.terminal_count < 1:
            raise ValueError("terminal_count must be >= 1")


@dataclass(frozen=True)
class EventRecord:
    kind: str
    t: float
    state: np.ndarray
    direction_of_crossing: int
    degenerate: bool = False


def segment_distance(u: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance from point ``u`` to the segment from ``a`` to ``b``."""
    w = b - a
    denom = float(np.dot(w, w))
    if denom == 0.0:
        return float(np.linalg.norm(u - a))
    frac = float(np.clip(np.dot(u - a, w) / denom, 0.0, 1.0))
    return float(np.linalg.norm(u - (a + frac * w)))


def _event_function(spec: EventSpec, params: Params):
    if spec.kind == "X_ZERO":
        return lambda t, u: u[0]
    if spec.kind == "XPRIME_SIGN_CHANGE":
        s = params.s
        return lambda t, u: s * (u[1] - u[0])
    if spec.kind == "PLANE_XY_CROSS":
        return lambda t, u: u[1] - u[0]
    if spec.kind == "PLANE_Z_CROSS":
        level = spec.level
        return lambda t, u: u[2] - level
    if spec.kind == "ELLIPSOID_EXIT":
        bound = 40.0 * params.R
        return lambda t, u: ellipsoid_value(u, params) - bound
    if spec.kind == "SEGMENT_L_HIT":
        geo = spec.geometry
        a = geo.segment_point(1.0)
        b = geo.segment_point(0.0)
        radius = spec.tube_radius
        return lambda t, u: radius - segment_distance(u, a, b)
    raise ValueError(spec.kind)


@dataclass
class Trajectory:
    """Piecewise dense solution with its detected events.

    Node times are strictly monotone in the integration direction; segment i
    interpolates between nodes i and i+1 and matches them exactly at the ends.
    """

    params: Params
    config: IntegratorConfig
    ts: np.ndarray
    states: np.ndarray
    events: list[EventRecord]
    status: str
    tracked_kinds: tuple[str, ...] = ()
    _segments: list = field(repr=False, default_factory=list)

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def n_steps(self) -> int:
        return len(self.ts) - 1

    def span(self) -> tuple[float, float]:
        lo, hi = sorted((self.t0, self.t_end))
        return lo, hi

    def evaluate(self, t: float) -> np.ndarray:
        lo, hi = self.span()
        slop = 1e-10 * max(1.0, abs(lo), abs(hi))
        if t < lo - slop or t > hi + slop:
            raise OutOfSpan(f"t={t} outside [{lo}, {hi}]")
        t = min(max(t, lo), hi)
        if not self._segments:
            return self.states[0].copy()
        keys = self.ts if self.config.sign > 0 else -self.ts
        key = t if self.config.sign > 0 else -t
        i = int(np.searchsorted(keys, key, side="right")) - 1
        i = min(max(i, 0), len(self._segments) - 1)
        return np.asarray(self._segments[i](t), dtype=float)

    def event_times(self, kind: str, include_degenerate: bool = False) -> list[float]:
        return [
            e.t
            for e in self.events
            if e.kind == kind and (include_degenerate or not e.degenerate)
        ]

    def export_csv(self, path) -> None:
        """Write node states as CSV with header t,x,y,z."""
        with open(path, "w") as fh:
            fh.write("t,x,y,z\n")
            for t, u in zip(self.ts, self.states):
                fh.write(
                    f"{float(t)!r},{float(u[0])!r},{float(u[1])!r},{float(u[2])!r}\n"
                )

    def export_events_jsonl(self, path) -> None:
        """Write one JSON object per event, keys sorted, floats exact."""
        with open(path, "w") as fh:
            for e in self.events:
                fh.write(
                    json.dumps(
                        {
                            "degenerate": e.degenerate,
                            "direction": e.direction_of_crossing,
                            "kind": e.kind,
                            "state": [float(v) for v in e.state],
                            "t": e.t,
                        },
                        sort_keys=True,
                    )
                )
                fh.write("\n")


def evaluate(trajectory: Trajectory, t: float) -> np.ndarray:
    """Dense-output value of the trajectory at time ``t``."""
    return trajectory.evaluate(t)


def _bisect(g, lo: float, hi: float, g_lo: float, g_hi: float, tol: float) -> float:
    # plain bisection: the bracket provably halves every iteration
    s_lo = math.copysign(1.0, g_lo)
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == 0.0:
            hi = mid
            break
        if math.copysign(1.0, g_mid) == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def locate_event(trajectory: Trajectory, t_lo: float, t_hi: float, fn, tol: float | None = None) -> float:
    """Refine a sign change of ``fn(t, state)`` between ``t_lo`` and ``t_hi``.

    Raises :class:`NoSignChange` when the endpoint values do not straddle
    zero.  Pure bisection on the dense interpolant; deterministic, and the
    bracket width at least halves per iteration.
    """
    tol = trajectory.config.event_tol if tol is None else tol
    g = lambda t: fn(t, trajectory.evaluate(t))
    g_lo, g_hi = g(t_lo), g(t_hi)
    if g_lo == 0.0:
        return t_lo
    if g_hi == 0.0:
        return t_hi
    if math.copysign(1.0, g_lo) == math.copysign(1.0, g_hi):
        raise NoSignChange(f"no sign change on [{t_lo}, {t_hi}]: {g_lo} .. {g_hi}")
    return _bisect(g, t_lo, t_hi, g_lo, g_hi, tol)


def _scan_dense(seg, t_a: float, t_b: float, fn, last_sign: float, tol: float):
    """Sign-change scan over one dense piece, excluding the left endpoint.

    ``seg`` is a dense interpolant callable on scalars or arrays.  Returns
    (crossings, updated last_sign) where each crossing is (t, state,
    new_sign).  ``last_sign`` carries the most recent nonzero sign from
    earlier pieces; zeros extend it, so tangencies do not flip.
    """
    ts = np.linspace(t_a, t_b, _SUBSAMPLES + 1)
    block = np.asarray(seg(ts[1:]), dtype=float)
    out = []
    prev_t = t_a
    g = lambda tt: fn(tt, np.asarray(seg(tt), dtype=float))
    for j, t in enumerate(ts[1:]):
        val = fn(t, block[:, j])
        sgn = math.copysign(1.0, val) if val != 0.0 else 0.0
        if sgn != 0.0:
            if last_sign != 0.0 and sgn != last_sign:
                t_star = _bisect(g, prev_t, t, g(prev_t), val, tol)
                out.append((t_star, np.asarray(seg(t_star), dtype=float), int(sgn)))
            last_sign = sgn
        prev_t = t
    return out, last_sign


def scan_scalar_crossings(trajectory: Trajectory, fn, tol: float | None = None):
    """All sign changes of ``fn(t, state)`` along a stored trajectory.

    Same subsampling, zero-inheritance, and bisection refinement as the
    in-flight event detector; usable for any scalar monitor after the fact.
    Returns a list of (t, state, direction_of_crossing).
    """
    tol = trajectory.config.event_tol if tol is None else tol
    out: list[tuple[float, np.ndarray, int]] = []
    v0 = fn(float(trajectory.ts[0]), trajectory.states[0])
    last_sign = math.copysign(1.0, v0) if v0 != 0.0 else 0.0
    for i, seg in enumerate(trajectory._segments):
        t_a, t_b = float(trajectory.ts[i]), float(trajectory.ts[i + 1])
        found, last_sign = _scan_dense(seg, t_a, t_b, fn, last_sign, tol)
        out.extend(found)
    return out


def integrate(
    start: np.ndarray,
    params: Params,
    config: IntegratorConfig | None = None,
    events: list[EventSpec] | None = None,
) -> Trajectory:
    """Integrate the flow from ``start``, detecting the requested events.

    Forward or backward per the config; the returned trajectory carries all
    accepted steps, their dense interpolants, the refined event records in
    time order, and a status explaining why stepping ended.
    """
    config = config or IntegratorConfig()
    events = events or []
    start = np.asarray(start, dtype=float)
    if start.shape != (3,) or not np.all(np.isfinite(start)):
        raise ValueError(f"start must be a finite 3-vector, got {start}")

    f = lambda t, u: rhs(u, params)
    t_bound = config.sign * config.t_max
    cls = _METHODS[config.method]
    solver = cls(
        f,
        0.0,
        start.copy(),
        t_bound,
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=config.max_step,
    )

    fns = [_event_function(sp, params) for sp in events]
    last_signs = []
    for fn in fns:
        v0 = fn(0.0, start)
        last_signs.append(math.copysign(1.0, v0) if v0 != 0.0 else 0.0)
    counts = [0] * len(events)

    ts = [0.0]
    states = [start.copy()]
    segments: list = []
    records: list[EventRecord] = []
    status = OK
    sgn = config.sign

    while solver.status == "running":
        try:
            solver.step()
        except Exception:
            status = STEP_UNDERFLOW
            break
        if solver.status == "failed":
            status = STEP_UNDERFLOW
            break
        dense = solver.dense_output()
        t_prev, t_now = ts[-1], float(solver.t)
        if abs(t_now - t_prev) < MIN_STEP:
            status = STEP_UNDERFLOW
            break
        segments.append(dense)
        ts.append(t_now)
        states.append(np.asarray(solver.y, dtype=float))

        step_records: list[tuple[float, int, EventRecord]] = []
        for k, (sp, fn) in enumerate(zip(events, fns)):
            found, last_signs[k] = _scan_dense(
                dense, t_prev, t_now, fn, last_signs[k], config.event_tol
            )
            for t_star, u_star, direction in found:
                degenerate = False
                if sp.kind == "XPRIME_SIGN_CHANGE":
                    x, _, z = u_star
                    factor = float(x * (params.R - 1.0 - z))
                    degenerate = abs(factor) <= sp.tangency_tol
                step_records.append(
                    (
                        t_star,
                        k,
                        EventRecord(
                            sp.kind, float(t_star), u_star, direction, degenerate
                        ),
                    )
                )

        step_records.sort(key=lambda item: sgn * item[0])
        cut: float | None = None
        for t_star, k, rec in step_records:
            records.append(rec)
            if not rec.degenerate:
                counts[k] += 1
                tc = events[k].terminal_count
                if tc is not None and counts[k] >= tc:
                    cut = t_star
                    break
        if cut is not None:
            status = TERMINAL_EVENT
            ts[-1] = cut
            states[-1] = np.asarray(dense(cut), dtype=float)
            break
        if float(np.linalg.norm(solver.y)) > BLOW_UP_NORM:
            status = BLOW_UP
            break

    return Trajectory(
        params=params,
        config=config,
        ts=np.asarray(ts),
        states=np.asarray(states),
        events=records,
        status=status,
        tracked_kinds=tuple(sp.kind for sp in events),
        _segments=segments,
    )
