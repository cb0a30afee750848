"""Integrate the unstable branch, record events, and read off its word.

The branch leaves the origin along the positive eigendirection.  Every zero
of x and every sign change of x' is located by bisection on the dense output;
the word is the flip count between consecutive zeros.

Run:  python3 demos/02_events_and_traces.py       (writes demos/out/)
"""

import pathlib

from lorenzlab import EventSpec, Params
from lorenzlab.manifold import branch_trajectory
from lorenzlab.trace import summarize

OUT = pathlib.Path(__file__).parent / "out"


def main() -> None:
    p = Params(10.0, 1.0, 12.0)
    traj = branch_trajectory(
        p,
        t_max=30.0,
        events=[EventSpec("X_ZERO"), EventSpec("XPRIME_SIGN_CHANGE")],
    )
    print(f"integrated {traj.span()[1]:g} time units in {traj.n_steps} steps")

    zeros = traj.event_times("X_ZERO")
    flips = traj.event_times("XPRIME_SIGN_CHANGE")
    print(f"zeros of x: {len(zeros)} -> {[round(t, 6) for t in zeros]}")
    print(f"sign changes of x': {len(flips)} (first three: "
          f"{[round(t, 6) for t in flips[:3]]})")

    s = summarize(traj)
    print(f"word so far: {s.word or '(no completed letter yet)'}")
    print(f"open tail: {s.open_tail}, flips in the tail: "
          f"{s.sigma[-1] if s.open_tail else 0}")
    print("reading: exactly one flip precedes the single zero; after it the")
    print("trajectory settles toward the positive equilibrium and x never")
    print("returns to zero, so the second zero time is infinite.")

    OUT.mkdir(exist_ok=True)
    traj.export_csv(OUT / "branch_R12.csv")
    traj.export_events_jsonl(OUT / "branch_R12.events.jsonl")
    print(f"wrote {OUT / 'branch_R12.csv'} and the matching events file")


if __name__ == "__main__":
    main()
