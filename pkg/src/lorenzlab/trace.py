"""Combinatorics of a trajectory: zeros of x, flips of x', symbols, regimes.

The symbolic data extracted here drive everything in the shooting analysis:
``t_1 < t_2 < ...`` are the zeros of x, ``tau_1 < tau_2 < ...`` the sign
changes of x', and ``sigma_i`` counts the flips strictly inside
``(t_i, t_{i+1})``.  The final interval is open whenever the horizon cut it
off before another zero; its count is reported but kept out of ``word``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import equilibria
from .integrator import BLOW_UP, STEP_UNDERFLOW, Trajectory

__all__ = [
    "TraceSummary",
    "BranchClass",
    "MissingEvents",
    "summarize",
    "classify_branch",
    "ALL_POSITIVE",
    "CROSSES_ZERO",
    "UNDETERMINED",
    "POS_TOL",
]

ALL_POSITIVE = "ALL_POSITIVE"
CROSSES_ZERO = "CROSSES_ZERO"
UNDETERMINED = "UNDETERMINED"

POS_TOL = 1e-8


class MissingEvents(ValueError):
    """The trajectory was integrated without the events this analysis needs."""


@dataclass(frozen=True)
class TraceSummary:
    """Ordered event times and the symbol sequence between zeros of x.

    ``sigma`` has one entry per interval between consecutive zeros, plus one
    trailing entry for the open interval after the last zero when the
    trajectory continues past it (``open_tail`` true).  ``word`` contains only
    the completed intervals.
    """

    x_zeros: tuple[float, ...]
    xprime_changes: tuple[float, ...]
    sigma: tuple[int, ...]
    open_tail: bool
    word: tuple[int, ...]
    degenerate: bool

    def flips_before_first_zero(self) -> int:
        if not self.x_zeros:
            return len(self.xprime_changes)
        t1 = self.x_zeros[0]
        return sum(1 for tau in self.xprime_changes if tau <= t1)

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": list(self.x_zeros),
                "tau": list(self.xprime_changes),
                "sigma": list(self.sigma),
                "open_tail": self.open_tail,
            },
            sort_keys=True,
        )


@dataclass(frozen=True)
class BranchClass:
    """Regime verdict for an unstable-branch trajectory.

    ALL_POSITIVE needs more than positivity over the horizon: the tail must
    also look trapped (distance to the positive equilibrium shrinking along
    the run and ending closer to it than to the origin scale), because
    infinite-time positivity cannot be observed directly.  Positivity without
    that certificate stays UNDETERMINED with ``positive_up_to_horizon`` set.
    """

    tag: str
    t1: float | None = None
    flips_before_t1: int | None = None
    horizon: float | None = None
    positive_up_to_horizon: bool = False
    trapped: bool = False
    cause: str | None = None


def _direction_order(traj: Trajectory, times: list[float]) -> list[float]:
    return sorted(times, key=lambda t: traj.config.sign * t)


def summarize(trajectory: Trajectory) -> TraceSummary:
    """Extract zeros, flips, and the symbol counts from recorded events.

    Counts are strict: a flip exactly at a zero of x belongs to neither
    adjacent interval.  Degenerate (tangential) flips are excluded from every
    count and raise the summary's ``degenerate`` flag instead.
    """
    for kind in ("X_ZERO", "XPRIME_SIGN_CHANGE"):
        if kind not in trajectory.tracked_kinds:
            raise MissingEvents(f"trajectory was integrated without {kind} events")

    zeros = _direction_order(trajectory, trajectory.event_times("X_ZERO"))
    flips = _direction_order(trajectory, trajectory.event_times("XPRIME_SIGN_CHANGE"))
    degenerate = any(e.degenerate for e in trajectory.events)

    sgn = trajectory.config.sign
    key = lambda t: sgn * t

    sigma: list[int] = []
    for a, b in zip(zeros, zeros[1:]):
        sigma.append(sum(1 for tau in flips if key(a) < key(tau) < key(b)))
    word = tuple(sigma)

    open_tail = False
    if zeros:
        last = zeros[-1]
        if key(trajectory.t_end) > key(last) + 1e-12:
            open_tail = True
            sigma.append(sum(1 for tau in flips if key(tau) > key(last)))

    return TraceSummary(
        x_zeros=tuple(zeros),
        xprime_changes=tuple(flips),
        sigma=tuple(sigma),
        open_tail=open_tail,
        word=word,
        degenerate=degenerate,
    )


def _tail_trapped(trajectory: Trajectory) -> bool:
    # distance to the positive equilibrium sampled late in the run must
    # shrink, and the endpoint must sit well inside the equilibrium scale
    p0 = equilibria(trajectory.params).p0
    lo, hi = trajectory.span()
    fracs = (0.6, 0.8, 1.0)
    ds = []
    for f in fracs:
        t = lo + f * (hi - lo) if trajectory.config.sign > 0 else hi + f * (lo - hi)
        ds.append(float(np.linalg.norm(trajectory.evaluate(t) - p0)))
    shrinking = ds[0] > ds[1] > ds[2]
    return shrinking and ds[2] < 0.75 * float(np.linalg.norm(p0))


def classify_branch(trajectory: Trajectory, positivity_horizon: float) -> BranchClass:
    """Decide CROSSES_ZERO / ALL_POSITIVE / UNDETERMINED for a branch run.

    CROSSES_ZERO is immediate once a certified zero of x was recorded,
    whatever happened afterwards.  ALL_POSITIVE requires the run to cover
    ``positivity_horizon``, never dip below ``-POS_TOL`` in any component
    (the seed itself starts with z = 0), end above ``POS_TOL``, and satisfy
    the trapping certificate.  Integrator failures without a zero yield
    UNDETERMINED with the failure as cause.
    """
    if "X_ZERO" not in trajectory.tracked_kinds:
        raise MissingEvents("trajectory was integrated without X_ZERO events")

    zeros = _direction_order(trajectory, trajectory.event_times("X_ZERO"))
    if zeros:
        t1 = zeros[0]
        flips = [
            t
            for t in trajectory.event_times("XPRIME_SIGN_CHANGE")
            if trajectory.config.sign * t <= trajectory.config.sign * t1
        ] if "XPRIME_SIGN_CHANGE" in trajectory.tracked_kinds else []
        return BranchClass(tag=CROSSES_ZERO, t1=t1, flips_before_t1=len(flips))

    span = abs(trajectory.t_end - trajectory.t0)
    if trajectory.status in (BLOW_UP, STEP_UNDERFLOW):
        return BranchClass(tag=UNDETERMINED, horizon=span, cause=trajectory.status)

    mins = trajectory.states.min(axis=0)
    positive = bool(np.all(trajectory.states[-1] > POS_TOL)) and bool(
        np.all(mins > -POS_TOL)
    )
    if span + 1e-9 < positivity_horizon:
        return BranchClass(
            tag=UNDETERMINED,
            horizon=span,
            positive_up_to_horizon=positive,
            cause="horizon not covered",
        )
    trapped = _tail_trapped(trajectory)
    if positive and trapped:
        return BranchClass(
            tag=ALL_POSITIVE,
            horizon=span,
            positive_up_to_horizon=True,
            trapped=True,
        )
    # trapped is reported even when positivity failed: just below the
    # crossing regime the branch undershoots in y while x stays positive and
    # the orbit still settles onto the positive equilibrium; callers doing
    # the crossing dichotomy (find_r_star) need that distinction
    return BranchClass(
        tag=UNDETERMINED,
        horizon=span,
        positive_up_to_horizon=positive,
        trapped=trapped,
        cause="negative transient; tail trapped" if trapped else "no trapping certificate",
    )
