"""Lorenz vector field, equilibria, linearization, and the fixed geometry.

The system is

    x' = s (y - x)
    y' = R x - y - x z
    z' = x y - q z

with positive coefficients s, q and R > 1.  Everything downstream (event
detection, shooting, enclosures) consumes the pure functions defined here.

Geometric objects used by the shooting analysis:

* ``p0``: the equilibrium with x = y > 0 and z = R - 1.
* ``M``: the line {x = y, z = R - 1}.  On the plane y = x the crossing
  function y - x has derivative x (R - 1 - z) along the flow, so M is exactly
  the locus where plane crossings degenerate into tangencies.
* ``E``: the ellipsoid x^2 + (10/R) y^2 + (10/R)(z - 2R)^2 <= 40 R, positively
  invariant under the flow for the parameter ranges exercised here.
* ``L``: the segment joining p0 to the first crossing p1 of the unstable
  branch with the plane x = y; shooting interpolates along it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Params",
    "EquilibriumSet",
    "LinearizationReport",
    "Geometry",
    "EmptyIntersection",
    "state",
    "rhs",
    "jacobian",
    "equilibria",
    "unstable_eigenpair",
    "complex_pair_at_p0",
    "ellipsoid_value",
    "monitor_S_Q",
    "m_cap_e_extent",
]


@dataclass(frozen=True)
class Params:
    """Coefficient triple (s, q, R).  Requires s > 0, q > 0, R > 1.

    R > 1 is not a convenience: both the positive equilibrium and the
    one-dimensional unstable direction at the origin exist only then.
    """

    s: float
    q: float
    R: float

    def __post_init__(self) -> None:
        for name in ("s", "q", "R"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite number, got {v!r}")
        if self.s <= 0:
            raise ValueError(f"s must be positive, got {self.s}")
        if self.q <= 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if self.R <= 1:
            raise ValueError(f"R must exceed 1, got {self.R}")


def state(x: float, y: float, z: float) -> np.ndarray:
    """Build a phase-space point as a float array, rejecting non-finite input."""
    p = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"state components must be finite, got {p}")
    return p


@dataclass(frozen=True)
class EquilibriumSet:
    """The three rest points: origin, positive equilibrium, and its mirror."""

    origin: np.ndarray
    p0: np.ndarray
    p0_mirror: np.ndarray

    def __iter__(self):
        return iter((self.origin, self.p0, self.p0_mirror))


@dataclass(frozen=True)
class LinearizationReport:
    """Jacobian and spectrum at a point; eigenvector present only at the origin."""

    jacobian: np.ndarray
    eigenvalues: np.ndarray
    unstable_eigenvector: np.ndarray | None


@dataclass(frozen=True)
class Geometry:
    """The shooting geometry: p1, the segment L, and the line M.

    ``p1`` is the first crossing of the unstable branch with the plane x = y;
    it is produced by the trajectory machinery and injected here, keeping this
    type free of integration.
    """

    params: Params
    p1: np.ndarray

    def __post_init__(self) -> None:
        if abs(self.p1[0] - self.p1[1]) > 1e-6 * max(1.0, abs(self.p1[0])):
            raise ValueError(f"p1 must lie on the plane x = y, got {self.p1}")

    def segment_point(self, alpha: float) -> np.ndarray:
        """Point alpha * p0 + (1 - alpha) * p1 on L, alpha in [0, 1]."""
        p0 = equilibria(self.params).p0
        return alpha * p0 + (1.0 - alpha) * self.p1

    def line_m_point(self, xi: float) -> np.ndarray:
        """Point (xi, xi, R - 1) on the tangency line M."""
        return np.array([xi, xi, self.params.R - 1.0])


class EmptyIntersection(ValueError):
    """Raised when the line M does not meet the ellipsoid E."""


def rhs(u: np.ndarray, params: Params) -> np.ndarray:
    """Vector field value at ``u``.

    The y component is grouped as x((R-1) - z) + (x - y) rather than
    Rx - y - xz: at the rest points z is stored as the float R-1 and x == y,
    so both differences are exactly zero and no Rx-sized rounding survives.
    The grouping also keeps the tangency factor x(R-1-z) accurate near the
    line M, where the ungrouped form cancels catastrophically.
    """
    x, y, z = u
    s, q, R = params.s, params.q, params.R
    return np.array([s * (y - x), x * ((R - 1.0) - z) + (x - y), x * y - q * z])


def jacobian(u: np.ndarray, params: Params) -> np.ndarray:
    """Derivative matrix of the vector field at ``u``."""
    x, y, z = u
    s, q, R = params.s, params.q, params.R
    return np.array(
        [
            [-s, s, 0.0],
            [R - z, -1.0, -x],
            [y, x, -q],
        ]
    )


def equilibria(params: Params) -> EquilibriumSet:
    """All rest points, in closed form.

    The positive equilibrium has x = y = sqrt(q (R - 1)) and z = R - 1; the
    mirror negates x and y.  Closed form rather than root-finding keeps the
    values exact and deterministic.
    """
    a = math.sqrt(params.q * (params.R - 1.0))
    h = params.R - 1.0
    return EquilibriumSet(
        origin=np.zeros(3),
        p0=np.array([a, a, h]),
        p0_mirror=np.array([-a, -a, h]),
    )


def unstable_eigenpair(params: Params) -> tuple[float, np.ndarray]:
    """Positive eigenvalue and unit eigenvector of the origin's linearization.

    The z-equation decouples at the origin, so the unstable direction lies in
    the z = 0 plane; the eigenvector is oriented with positive x and y
    components, selecting the branch along which all coordinates grow.
    """
    s, R = params.s, params.R
    lam = (-(s + 1.0) + math.sqrt((s + 1.0) ** 2 + 4.0 * s * (R - 1.0))) / 2.0
    v = np.array([1.0, 1.0 + lam / s, 0.0])
    return lam, v / np.linalg.norm(v)


def _char_cubic_coeffs(params: Params) -> tuple[float, float, float]:
    # characteristic polynomial at p0: l^3 + a l^2 + b l + c
    s, q, R = params.s, params.q, params.R
    return s + q + 1.0, q * (s + R), 2.0 * s * q * (R - 1.0)


def complex_pair_at_p0(params: Params) -> bool:
    """Whether the linearization at the positive equilibrium has a nonreal pair.

    Decided by the sign of the cubic discriminant, computed from closed-form
    coefficients; negative discriminant means one real root plus a conjugate
    pair.  Within 1e-12 of zero the numerically computed spectrum breaks the
    tie on the size of its imaginary parts.
    """
    a, b, c = _char_cubic_coeffs(params)
    disc = (
        18.0 * a * b * c
        - 4.0 * a**3 * c
        + a**2 * b**2
        - 4.0 * b**3
        - 27.0 * c**2
    )
    scale = max(1.0, abs(a) ** 2 * abs(b) ** 2)
    if abs(disc) <= 1e-12 * scale:
        eig = np.linalg.eigvals(jacobian(equilibria(params).p0, params))
        return bool(np.max(np.abs(eig.imag)) > 1e-12)
    return disc < 0.0


def ellipsoid_value(u: np.ndarray, params: Params) -> float:
    """Quadratic form V whose sublevel set V <= 40 R is flow-invariant.

    V = x^2 + (10/R) y^2 + (10/R)(z - 2R)^2.  The leading coefficient is the
    literal constant 10, not s; invariance for s away from 10 is checked
    empirically by callers rather than assumed.
    """
    x, y, z = u
    R = params.R
    # grouped as 10*w*(w/R) so the origin evaluates to exactly 40.0*R in
    # floating point: w/R there is -2 exactly and the final doubling is exact
    w = z - 2.0 * R
    return float(x * x + 10.0 * y * (y / R) + 10.0 * w * (w / R))


def monitor_S_Q(u: np.ndarray) -> tuple[float, float]:
    """The two scalar monitors S = (y^2 + z^2)/2 - 50 x^2 and Q = z - x^2/20."""
    x, y, z = u
    return 0.5 * (y * y + z * z) - 50.0 * x * x, z - x * x / 20.0


def m_cap_e_extent(params: Params) -> tuple[float, float]:
    """Range of the x = y coordinate along M inside the ellipsoid E.

    Substituting (xi, xi, R - 1) into V <= 40 R gives
    xi^2 (R + 10) <= 40 R^2 - 10 (R + 1)^2, so the admissible xi form a
    symmetric interval.  Raises :class:`EmptyIntersection` when the right
    side is not positive.
    """
    R = params.R
    radicand = 40.0 * R * R - 10.0 * (R + 1.0) ** 2
    if radicand <= 0.0:
        raise EmptyIntersection(
            f"line M misses the ellipsoid at R={R}: 40R^2 - 10(R+1)^2 = {radicand}"
        )
    xi = math.sqrt(radicand / (R + 10.0))
    return -xi, xi
