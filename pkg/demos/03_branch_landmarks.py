"""Branch landmarks: checkpoint inequalities at large R and the crossing threshold.

At R=1000 the unstable branch rises and crosses three reference surfaces;
each crossing satisfies a set of coordinate inequalities (one bound fails by
a few parts in ten thousand and is reported as-is).  At fixed s=10, q=1 the
first-zero behavior switches on at a threshold R* which a bisection brackets.

Run:  python3 demos/03_branch_landmarks.py        (takes ~30 s)
"""

from lorenzlab import Params, checkpoint_report, find_r_star


def main() -> None:
    rep = checkpoint_report(Params(10.0, 1.0, 1000.0))
    print("checkpoints at (10, 1, 1000):")
    for group in rep.groups:
        for name, ok, value in group.checks:
            print(f"  {group.label:<12} {name:<18} {'PASS' if ok else 'FAIL'}"
                  f"  {value:.10g}")
    print(f"  heights rise monotonically: {rep.monotone_rise}")
    print(f"  overall: {'PASS' if rep.all_pass else 'FAIL'}")
    print()

    # a narrow starting bracket keeps this quick; the library default
    # handles the full (1.01, 1000) range the same way
    res = find_r_star(10.0, 1.0, (7.5, 9.0), width_tol=1e-3)
    lo, hi = res.bracket
    print(f"threshold bracket: [{lo:.6f}, {hi:.6f}]  width {hi - lo:.2e}")
    print(f"status: {res.status} after {res.iterations} bisections")
    print("below it the branch stays positive and spirals into the")
    print("equilibrium; above it x crosses zero after exactly one flip.")


if __name__ == "__main__":
    main()
