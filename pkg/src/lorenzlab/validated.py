"""Desk-scale interval arithmetic and rigorous short-span flow enclosures.

Every operation rounds outward, so a computed interval always contains the
exact real result.  The enclosure stepper is deliberately first order: a
Taylor step whose remainder is bounded by interval evaluation over an
a-priori box.  It exists to demonstrate that certified integration of this
field is possible and to measure how fast enclosure width grows, not to
compete with modern validated solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Params
from .integrator import segment_distance

__all__ = [
    "Interval",
    "Box",
    "EnclosureRun",
    "CertifyResult",
    "ValidationFailed",
    "CERTIFIED_2A",
    "INCONCLUSIVE",
    "interval_rhs",
    "interval_second_derivative",
    "enclose_flow",
    "certify_condition_b_segment",
]

CERTIFIED_2A = "CERTIFIED_2A"
INCONCLUSIVE = "INCONCLUSIVE"

_INF = math.inf


def _down(v: float) -> float:
    return math.nextafter(v, -_INF)


def _up(v: float) -> float:
    return math.nextafter(v, _INF)


class ValidationFailed(RuntimeError):
    """The a-priori box could not be certified at the minimum step size."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval bounds must not be NaN")
        if self.lo > self.hi:
            raise ValueError(f"lower bound {self.lo} exceeds upper bound {self.hi}")

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def encloses(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def inflate(self, delta: float) -> "Interval":
        return Interval(_down(self.lo - delta), _up(self.hi + delta))

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def add(self, other: "Interval") -> "Interval":
        return Interval(_down(self.lo + other.lo), _up(self.hi + other.hi))

    def sub(self, other: "Interval") -> "Interval":
        return Interval(_down(self.lo - other.hi), _up(self.hi - other.lo))

    def neg(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def mul(self, other: "Interval") -> "Interval":
        corners = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        if any(math.isnan(c) for c in corners):
            # only 0 * inf produces NaN; the product set is then unbounded
            return Interval(-_INF, _INF)
        return Interval(_down(min(corners)), _up(max(corners)))

    def scale(self, c: float) -> "Interval":
        if c == 0.0:
            return Interval(0.0, 0.0)
        a, b = c * self.lo, c * self.hi
        if a > b:
            a, b = b, a
        return Interval(_down(a), _up(b))

    def square(self) -> "Interval":
        a, b = self.lo * self.lo, self.hi * self.hi
        lo = 0.0 if self.lo <= 0.0 <= self.hi else _down(min(a, b))
        return Interval(lo, _up(max(a, b)))

    __add__ = add
    __sub__ = sub
    __mul__ = mul
    __neg__ = neg

    def to_jsonable(self) -> list[float]:
        return [self.lo, self.hi]


@dataclass(frozen=True)
class Box:
    x: Interval
    y: Interval
    z: Interval

    @classmethod
    def from_point(cls, u) -> "Box":
        return cls(Interval.point(float(u[0])), Interval.point(float(u[1])), Interval.point(float(u[2])))

    @classmethod
    def from_point_with_width(cls, u, half_width: float) -> "Box":
        return cls.from_point(u).inflate(half_width)

    def components(self) -> tuple[Interval, Interval, Interval]:
        return (self.x, self.y, self.z)

    @property
    def width(self) -> float:
        return max(self.x.width, self.y.width, self.z.width)

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x.mid, self.y.mid, self.z.mid])

    @property
    def radius(self) -> float:
        """Half-diagonal: farthest any box point sits from the center."""
        return 0.5 * math.sqrt(self.x.width**2 + self.y.width**2 + self.z.width**2)

    def contains(self, u) -> bool:
        return (
            self.x.contains(float(u[0]))
            and self.y.contains(float(u[1]))
            and self.z.contains(float(u[2]))
        )

    def encloses(self, other: "Box") -> bool:
        return (
            self.x.encloses(other.x)
            and self.y.encloses(other.y)
            and self.z.encloses(other.z)
        )

    def inflate(self, delta: float) -> "Box":
        return Box(self.x.inflate(delta), self.y.inflate(delta), self.z.inflate(delta))

    def add(self, other: "Box") -> "Box":
        return Box(self.x.add(other.x), self.y.add(other.y), self.z.add(other.z))

    def scale(self, c: float) -> "Box":
        return Box(self.x.scale(c), self.y.scale(c), self.z.scale(c))

    def mul_interval(self, iv: Interval) -> "Box":
        return Box(self.x.mul(iv), self.y.mul(iv), self.z.mul(iv))

    def to_jsonable(self) -> dict:
        return {"x": self.x.to_jsonable(), "y": self.y.to_jsonable(), "z": self.z.to_jsonable()}


def interval_rhs(box: Box, params: Params, sign: float = 1.0) -> Box:
    """Natural interval extension of the vector field over ``box``.

    ``sign=-1`` evaluates the time-reversed field, used for backward
    enclosures.
    """
    x, y, z = box.components()
    dx = y.sub(x).scale(params.s)
    dy = x.scale(params.R).sub(y).sub(x.mul(z))
    dz = x.mul(y).sub(z.scale(params.q))
    out = Box(dx, dy, dz)
    return out if sign >= 0 else out.scale(-1.0)


def interval_rhs_centered(box: Box, params: Params, sign: float = 1.0) -> Box:
    """Mean-value form of the field over ``box``: f(c) + J(box) * (box - c).

    Contains everything the natural extension contains but keeps the
    R*x - x*z cancellation alive, so widths grow like |R - z| rather than
    R + |z|.  Falls back to intersecting with the natural extension, which
    is tighter for very wide boxes.
    """
    c = box.center
    fc = interval_rhs(Box.from_point(c), params, 1.0)
    ex = box.x.sub(Interval.point(float(c[0])))
    ey = box.y.sub(Interval.point(float(c[1])))
    ez = box.z.sub(Interval.point(float(c[2])))
    x, y, z = box.components()
    s, q, R = params.s, params.q, params.R

    dx = fc.x.add(ey.sub(ex).scale(s))
    rz = Interval.point(R).sub(z)
    dy = fc.y.add(rz.mul(ex)).sub(ey).sub(x.mul(ez))
    dz = fc.z.add(y.mul(ex)).add(x.mul(ey)).sub(ez.scale(q))
    mv = Box(dx, dy, dz)

    nat = interval_rhs(box, params, 1.0)
    out = Box(
        _intersect(mv.x, nat.x),
        _intersect(mv.y, nat.y),
        _intersect(mv.z, nat.z),
    )
    return out if sign >= 0 else out.scale(-1.0)


def _intersect(a: Interval, b: Interval) -> Interval:
    """Both enclose the same true set, so their intersection does too."""
    return Interval(max(a.lo, b.lo), min(a.hi, b.hi))


def interval_second_derivative(box: Box, params: Params, sign: float = 1.0) -> Box:
    """Interval enclosure of u'' over ``box`` (the field's derivative along
    itself, factored so R*x' - x'*z stays a single (R - z)*x' term).
    Independent of ``sign``: reversing time flips u' but not u''.
    """
    x, y, z = box.components()
    d = interval_rhs_centered(box, params, sign=1.0)
    dx, dy, dz = d.components()
    rz = Interval.point(params.R).sub(z)
    ddx = dy.sub(dx).scale(params.s)
    ddy = dx.mul(rz).sub(dy).sub(x.mul(dz))
    ddz = dx.mul(y).add(x.mul(dy)).sub(dz.scale(params.q))
    return Box(ddx, ddy, ddz)


@dataclass(frozen=True)
class EnclosureRun:
    steps: tuple[tuple[float, Box], ...]
    digits_lost_per_unit: float
    step_halvings: int

    @property
    def final_box(self) -> Box:
        return self.steps[-1][1]

    def to_jsonable(self) -> dict:
        return {
            "steps": [{"t": t, "box": b.to_jsonable()} for t, b in self.steps],
            "digits_lost_per_unit": self.digits_lost_per_unit,
            "step_halvings": self.step_halvings,
        }


_A_PRIORI_ITER = 18
_MAX_HALVINGS = 20


def _zero_to_h(h: float) -> Interval:
    return Interval(0.0, h) if h >= 0 else Interval(h, 0.0)


def _magnitude(box: Box) -> float:
    return max(max(abs(iv.lo), abs(iv.hi)) for iv in box.components())


def _finite(box: Box) -> bool:
    return all(
        math.isfinite(iv.lo) and math.isfinite(iv.hi) for iv in box.components()
    )


def _a_priori_box(box: Box, params: Params, h: float, sign: float) -> Box | None:
    """Box A with box + [0,h]*F(A) inside A, so solutions stay in A on [0,h].

    The inflation is proportional to the step's own motion h*|F| plus a
    rounding-level floor; an absolute margin would inject width on every
    step and be amplified exponentially downstream.
    """
    span = _zero_to_h(h)
    f = interval_rhs_centered(box, params, sign)
    fmag = _magnitude(f)
    eps = 16.0 * math.ulp(max(1.0, _magnitude(box)))
    delta = 1.1 * abs(h) * fmag + eps
    trial = box.inflate(delta)
    for _ in range(_A_PRIORI_ITER):
        if not _finite(trial):
            return None
        image = box.add(interval_rhs_centered(trial, params, sign).mul_interval(span))
        if trial.encloses(image):
            return trial
        trial = image.inflate(delta + eps)
        delta *= 2.0
    return None


def _taylor_step(box: Box, params: Params, h: float, sign: float, a_priori: Box) -> Box:
    """First-order Taylor step with certified remainder, in centered form.

    Writing box = c + e with c the midpoint, the image is enclosed by

        c + h*f(c)  +  (I + h*J(box)) * e  +  (h^2/2) * u''(A)

    (mean value theorem row by row for the middle term, Taylor remainder
    over the a-priori box A for the last).  Building the matrix I + h*J
    entrywise before multiplying keeps the diagonal contraction: the e_x
    coefficient is |1 - s*h|, not 1 + s*h, which is the difference between
    enclosure widths growing like the flow and growing like the norm of
    the Jacobian.
    """
    sh = sign * h
    c = box.center
    fc = interval_rhs(Box.from_point(c), params, 1.0)
    ex = box.x.sub(Interval.point(float(c[0])))
    ey = box.y.sub(Interval.point(float(c[1])))
    ez = box.z.sub(Interval.point(float(c[2])))
    x, y, z = box.components()
    s, q, R = params.s, params.q, params.R
    one = Interval.point(1.0)

    m11 = one.add(Interval.point(-s).scale(sh))
    m12 = Interval.point(s).scale(sh)
    m21 = Interval.point(R).sub(z).scale(sh)
    m22 = one.add(Interval.point(-1.0).scale(sh))
    m23 = x.neg().scale(sh)
    m31 = y.scale(sh)
    m32 = x.scale(sh)
    m33 = one.add(Interval.point(-q).scale(sh))

    vx = m11.mul(ex).add(m12.mul(ey))
    vy = m21.mul(ex).add(m22.mul(ey)).add(m23.mul(ez))
    vz = m31.mul(ex).add(m32.mul(ey)).add(m33.mul(ez))

    drift = Box.from_point(c).add(fc.scale(sh))
    remainder = interval_second_derivative(a_priori, params, sign).scale(0.5 * h * h)
    return drift.add(Box(vx, vy, vz).add(remainder))


def _march(
    start: Box,
    params: Params,
    t_span: float,
    step: float,
    sign: float,
    on_step=None,
) -> EnclosureRun:
    if t_span <= 0.0:
        raise ValueError(f"t_span must be positive, got {t_span}")
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    box = start
    t = 0.0
    total_halvings = 0
    steps = [(0.0, box)]
    while t < t_span * (1.0 - 1e-12):
        if not math.isfinite(box.width):
            raise ValidationFailed(
                f"VALIDATION_FAILED: enclosure width became infinite at t={t}"
            )
        h = min(step, t_span - t)
        a_priori = _a_priori_box(box, params, h, sign)
        tries = 0
        while a_priori is None:
            tries += 1
            if tries > _MAX_HALVINGS:
                raise ValidationFailed(
                    f"VALIDATION_FAILED: no a-priori box at t={t} after "
                    f"{_MAX_HALVINGS} halvings (width {box.width:.3e})"
                )
            h *= 0.5
            a_priori = _a_priori_box(box, params, h, sign)
        total_halvings += tries
        box = _taylor_step(box, params, h, sign, a_priori)
        t += h
        steps.append((t, box))
        if on_step is not None and not on_step(t, box):
            break

    w0 = start.width
    if w0 == 0.0:
        nonzero = [b.width for _, b in steps[1:] if b.width > 0.0]
        w0 = nonzero[0] if nonzero else 0.0
    w_end = steps[-1][1].width
    if w0 > 0.0 and w_end > 0.0:
        digits = math.log10(w_end / w0) / steps[-1][0]
    else:
        digits = 0.0
    return EnclosureRun(tuple(steps), digits, total_halvings)


def enclose_flow(start: Box, params: Params, t_span: float, step: float = 1e-3) -> EnclosureRun:
    """Certified forward enclosure of the flow of ``start`` over ``t_span``.

    Each step validates an a-priori box by a Picard-type containment test
    (halving the step up to 20 times before giving up), then advances with
    a first-order Taylor step whose remainder term is evaluated over that
    box.  Interval addition makes the width monotone non-decreasing; the
    ``digits_lost_per_unit`` field is log10 of the terminal/initial width
    ratio divided by the elapsed time (a width-0 start falls back to the
    first nonzero step width as baseline).
    """
    return _march(start, params, t_span, step, sign=1.0)


@dataclass(frozen=True)
class CertifyResult:
    verdict: str
    run: EnclosureRun
    exit_margin: float
    min_l_distance: float
    reason: str

    def to_jsonable(self) -> dict:
        return {
            "verdict": self.verdict,
            "exit_margin": self.exit_margin,
            "min_l_distance": self.min_l_distance,
            "reason": self.reason,
            "digits_lost_per_unit": self.run.digits_lost_per_unit,
            "n_steps": len(self.run.steps) - 1,
            "final_box": self.run.final_box.to_jsonable(),
        }


def certify_condition_b_segment(
    xi_interval: Interval,
    params: Params,
    back_span: float,
    geometry=None,
    step: float = 1e-3,
    ell_tol: float = 1e-6,
    width_cap: float = 1.0,
) -> CertifyResult:
    """Certified backward check of the exit alternative for an M-segment.

    The interval of tangency-line coordinates xi is boxed into states
    (xi, xi, R-1) and flowed backward with the enclosure stepper.  Verdict
    CERTIFIED_2A requires the final box to lie entirely outside the
    trapping ellipsoid while every intermediate box kept its distance to
    the segment L above the box radius plus ``ell_tol``; anything weaker is
    INCONCLUSIVE (a false certificate is never produced).  Intervals
    containing an equilibrium xi are rejected: the constant solution never
    leaves.
    """
    xi0 = math.sqrt(params.q * (params.R - 1.0))
    for equilibrium_xi in (xi0, -xi0):
        if xi_interval.contains(equilibrium_xi):
            raise ValueError(
                f"xi interval {xi_interval.to_jsonable()} contains the "
                f"equilibrium coordinate {equilibrium_xi}"
            )
    if geometry is None:
        from .conditions import build_geometry

        geometry = build_geometry(params)

    height = Interval.point(params.R - 1.0)
    start = Box(xi_interval, xi_interval, height)

    seg_a = np.array(
        [
            math.sqrt(params.q * (params.R - 1.0)),
            math.sqrt(params.q * (params.R - 1.0)),
            params.R - 1.0,
        ]
    )
    seg_b = np.asarray(geometry.p1, dtype=float)
    bound = 40.0 * params.R

    min_l_dist = _INF
    state = {"ok": True, "reason": ""}

    def on_step(t: float, box: Box) -> bool:
        nonlocal min_l_dist
        if box.width > width_cap:
            state["ok"] = False
            state["reason"] = f"enclosure width {box.width:.3e} exceeded cap at t={t}"
            return False
        dist = segment_distance(box.center, seg_a, seg_b)
        min_l_dist = min(min_l_dist, dist)
        if dist <= box.radius + ell_tol:
            state["ok"] = False
            state["reason"] = (
                f"box at t={t} came within {dist:.3e} of L "
                f"(radius {box.radius:.3e} + tol {ell_tol:.1e})"
            )
            return False
        return True

    run = _march(start, params, back_span, step, sign=-1.0, on_step=on_step)

    if not state["ok"]:
        return CertifyResult(INCONCLUSIVE, run, -_INF, min_l_dist, state["reason"])

    final = run.final_box
    v = _ellipsoid_interval(final, params)
    margin = v.lo - bound
    if run.steps[-1][0] < back_span * (1.0 - 1e-9):
        return CertifyResult(INCONCLUSIVE, run, margin, min_l_dist, "run stopped early")
    if margin > 0.0:
        return CertifyResult(
            CERTIFIED_2A,
            run,
            margin,
            min_l_dist,
            "final box entirely outside the trapping ellipsoid",
        )
    return CertifyResult(
        INCONCLUSIVE,
        run,
        margin,
        min_l_dist,
        "final box not provably outside the trapping ellipsoid",
    )


def _ellipsoid_interval(box: Box, params: Params) -> Interval:
    """Interval extension of the trapping function V over ``box``."""
    c = 10.0 / params.R
    shift = Interval.point(2.0 * params.R)
    x, y, z = box.components()
    return x.square().add(y.square().scale(c)).add(z.sub(shift).square().scale(c))
