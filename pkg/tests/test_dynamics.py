"""Vector field, equilibria, eigenpair, and ellipsoid geometry."""

import math

import numpy as np
import pytest

from lorenzlab import (
    Params,
    ellipsoid_value,
    equilibria,
    jacobian,
    m_cap_e_extent,
    rhs,
    state,
    unstable_eigenpair,
)


def random_params(rng, R_max=100.0, q_max=20.0) -> Params:
    # ranges where an absolute 1e-12 residual is expressible in doubles: the
    # z-equation residual at p0 is a few ulps of q(R-1), so q(R-1) must stay
    # below ~2e3.  Wider draws are covered by the relative-residual test.
    s = float(np.exp(rng.uniform(np.log(0.1), np.log(50.0))))
    q = float(np.exp(rng.uniform(np.log(0.1), np.log(q_max))))
    R = float(np.exp(rng.uniform(np.log(1.0 + 1e-6), np.log(R_max))))
    return Params(s, q, R)


def test_rhs_vanishes_at_equilibria():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        p = random_params(rng)
        eq = equilibria(p)
        for u in (eq.origin, eq.p0, eq.p0_mirror):
            residual = np.max(np.abs(rhs(u, p)))
            assert residual < 1e-12, (p, u, residual)


def test_rhs_vanishes_at_equilibria_relative_for_extreme_params():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        p = random_params(rng, R_max=5000.0, q_max=100.0)
        eq = equilibria(p)
        scale = max(1.0, p.q * (p.R - 1.0), p.s * math.sqrt(p.q * (p.R - 1.0)))
        for u in (eq.origin, eq.p0, eq.p0_mirror):
            residual = np.max(np.abs(rhs(u, p)))
            assert residual < 1e-12 * scale, (p, u, residual)


def test_unstable_eigenpair_satisfies_eigen_equation():
    rng = np.random.default_rng(1)
    for _ in range(500):
        p = random_params(rng)
        lam, v = unstable_eigenpair(p)
        assert lam > 0.0
        J = jacobian(equilibria(p).origin, p)
        residual = np.max(np.abs(J @ v - lam * v))
        # scale by the matrix norm: entries grow linearly in R and s
        assert residual < 1e-10 * max(1.0, np.max(np.abs(J))), (p, lam, residual)


def test_eigenvalue_closed_form_at_large_R():
    p = Params(10.0, 1.0, 1000.0)
    lam, _ = unstable_eigenpair(p)
    s, R = p.s, p.R
    expected = (-(s + 1.0) + math.sqrt((s + 1.0) ** 2 + 4.0 * s * (R - 1.0))) / 2.0
    assert abs(lam - expected) < 1e-9 * expected
    assert abs(lam - 94.601199) < 5e-7


def test_ellipsoid_value_center_and_origin_are_exact():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        p = random_params(rng)
        R = p.R
        assert ellipsoid_value(state(0.0, 0.0, 2.0 * R), p) == 0.0
        assert ellipsoid_value(state(0.0, 0.0, 0.0), p) == 40.0 * R


def test_m_cap_e_extent_endpoints_sit_on_the_ellipsoid():
    rng = np.random.default_rng(3)
    tested = 0
    for _ in range(2000):
        p = random_params(rng)
        try:
            lo, hi = m_cap_e_extent(p)
        except EmptyIntersection:
            continue
        tested += 1
        assert lo == -hi
        for xi in (lo, hi):
            V = ellipsoid_value(state(xi, xi, p.R - 1.0), p)
            assert abs(V - 40.0 * p.R) <= 1e-9 * 40.0 * p.R, (p, xi, V)
    assert tested > 100  # the sampler must actually exercise the formula


def test_m_cap_e_extent_shrinks_to_zero_at_small_R():
    # the radicand factors as 10 (R-1)(3R+1): always positive for R > 1 but
    # vanishing as R -> 1, so the admissible interval collapses continuously
    widths = []
    for R in (1.0001, 1.01, 2.0, 12.0):
        lo, hi = m_cap_e_extent(Params(10.0, 1.0, R))
        widths.append(hi - lo)
    assert widths == sorted(widths)
    assert widths[0] < 0.05
    hi12 = m_cap_e_extent(Params(10.0, 1.0, 12.0))[1]
    assert abs(hi12 - math.sqrt(185.0)) < 1e-12


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(4)
    p = Params(10.0, 1.0, 12.0)
    h = 1e-6
    for _ in range(100):
        u = rng.uniform(-30.0, 30.0, size=3)
        J = jacobian(u, p)
        for k in range(3):
            du = np.zeros(3)
            du[k] = h
            col = (rhs(u + du, p) - rhs(u - du, p)) / (2.0 * h)
            assert np.max(np.abs(col - J[:, k])) < 1e-6 * max(1.0, np.max(np.abs(col)))


def test_p0_coordinates_closed_form():
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = random_params(rng)
        x = math.sqrt(p.q * (p.R - 1.0))
        p0 = equilibria(p).p0
        assert p0[0] == p0[1]
        assert abs(p0[0] - x) <= 4.0 * np.spacing(x)
        assert p0[2] == p.R - 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        Params(10.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        Params(-1.0, 1.0, 12.0)
    with pytest.raises(ValueError):
        Params(10.0, 0.0, 12.0)
