"""Where the event ordering holds, and the backward dichotomy on the tangency line.

The ordering (one flip, first zero, then four more flips before the second
zero) holds on an R-interval bracketed here by a refined sweep.  On the
tangency line inside the ellipsoid, every sampled backward continuation
either leaves the ellipsoid without touching the shooting segment or flips
x' at least four times while x stays away from zero.

Run:  python3 demos/04_ordering_sweep_and_dichotomy.py   (takes ~10 s)
"""

import numpy as np

from lorenzlab import Params, check_condition_b, sweep_condition_a
from lorenzlab.conditions import REFERENCE_RANGES


def main() -> None:
    sweep = sweep_condition_a(10.0, 1.0, np.arange(7.5, 18.01, 0.5))
    lo, hi = sweep.estimated_range
    print(f"ordering holds on approximately [{lo:.4f}, {hi:.4f}]")
    print(f"previously reported empirical range: {REFERENCE_RANGES[(10.0, 1.0)]}")
    marks = "".join("#" if v.holds else "." for v in sweep.verdicts)
    print(f"grid verdicts: {marks}")
    print()

    result = check_condition_b(Params(10.0, 1.0, 12.0), n_samples=24)
    print("backward dichotomy at (10, 1, 12), 24 samples:")
    for tag, count in sorted(result.counts.items()):
        print(f"  {tag:<20} {count}")
    print(f"  holds: {result.holds}")
    sample = next(v for v in result.samples if v.verdict == "FOUR_CHANGES_LOCAL")
    print(f"example at xi={sample.xi:.4f}: {sample.n_local_flips} local flips"
          f" in window {tuple(round(w, 4) for w in sample.window)}")


if __name__ == "__main__":
    main()
