"""Tour of the vector field: equilibria, local rates, and the trapping ellipsoid.

Run:  python3 demos/01_vector_field_tour.py
"""

import numpy as np

from lorenzlab import Params, equilibria, m_cap_e_extent
from lorenzlab.dynamics import (
    complex_pair_at_p0,
    ellipsoid_value,
    jacobian,
    rhs,
    unstable_rate_at_origin,
)


def main() -> None:
    for R in (12.0, 28.0, 1000.0):
        p = Params(10.0, 1.0, R)
        eq = equilibria(p)
        print(f"--- s=10, q=1, R={R:g} ---")
        print(f"positive equilibrium p0 = {eq.p0}")
        print(f"residual of the field there: {rhs(eq.p0, p)}")
        lam = unstable_rate_at_origin(p)
        print(f"unstable rate at the origin: {lam:.6f}")
        print(f"complex pair at p0: {complex_pair_at_p0(p)}")

        ev = np.linalg.eigvals(jacobian(eq.p0, p))
        print("eigenvalues at p0:", np.round(ev, 4))

        lo, hi = m_cap_e_extent(p)
        print(f"tangency line inside the ellipsoid: xi in [{lo:.6f}, {hi:.6f}]")
        boundary = np.array([hi, hi, R - 1.0])
        print(f"V at that endpoint = {ellipsoid_value(boundary, p)!r}"
              f" (boundary level is {40.0 * R!r})")
        print()

    # the ellipsoid is tuned to s=10: V at the origin sits strictly inside
    p = Params(10.0, 1.0, 12.0)
    print("V(origin) / boundary level:",
          ellipsoid_value(np.zeros(3), p) / (40.0 * p.R))


if __name__ == "__main__":
    main()
