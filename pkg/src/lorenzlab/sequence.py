"""Constructive shooting: realize a prescribed word of 1's and 3's.

Starting points are taken on the segment L between the positive equilibrium
p0 (alpha = 1) and the branch crossing p1 (alpha = 0).  For a target word
M_1 .. M_n over {1, 3}, the shooter inductively narrows an alpha-interval so
that the j-th symbol sigma_j (the number of x' flips between consecutive
zeros t_j, t_{j+1} of x) matches M_j, keeping per-letter anchor witnesses
whose next symbol is already >= 4.  The induction mirrors a nested-interval
argument: each step's interval is contained in the previous one, and the
certificates let the chain be re-checked independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Geometry, Params, complex_pair_at_p0, equilibria
from .integrator import EventSpec, IntegratorConfig, integrate
from .trace import summarize
from .conditions import build_geometry, check_condition_a, _pool_map

__all__ = [
    "TargetWord",
    "ShootConfig",
    "LetterCertificate",
    "ShootState",
    "ShootResult",
    "EndpointBehaviorReport",
    "AnchorNotFound",
    "HorizonExhausted",
    "ConditionAFailed",
    "point_on_L",
    "endpoint_behaviors",
    "shoot_word",
    "sigma_transition_audit",
    "trace_word_at_alpha",
]


@dataclass(frozen=True)
class TargetWord:
    letters: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.letters:
            raise ValueError("target word must be nonempty")
        if any(m not in (1, 3) for m in self.letters):
            raise ValueError(f"letters must be 1 or 3, got {self.letters}")

    @classmethod
    def parse(cls, text: str) -> "TargetWord":
        return cls(tuple(int(c) for c in text.strip()))

    def __len__(self) -> int:
        return len(self.letters)


@dataclass(frozen=True)
class ShootConfig:
    grid_points: int = 33
    jump_tol: float = 5.0
    alpha_resolution: float = 1e-12
    horizon_base: float = 30.0
    horizon_per_letter: float = 15.0
    max_letters: int = 8
    max_refine_rounds: int = 6
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    alpha_min: float = 1e-3
    alpha_max: float = 1.0 - 1e-3

    def horizon(self, letter_index: int) -> float:
        return self.horizon_base + self.horizon_per_letter * (letter_index + 1)


class AnchorNotFound(RuntimeError):
    def __init__(self, letter_index: int, message: str):
        super().__init__(message)
        self.letter_index = letter_index


class HorizonExhausted(RuntimeError):
    pass


class ConditionAFailed(RuntimeError):
    pass


def point_on_L(alpha: float, geometry: Geometry) -> np.ndarray:
    """Affine point alpha*p0 + (1-alpha)*p1 on the shooting segment."""
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must be in [0,1], got {alpha}")
    return geometry.segment_point(alpha)


@dataclass(frozen=True)
class _Sample:
    """Per-alpha trace data: zero times, completed symbols, open-tail flips."""

    alpha: float
    zeros: tuple[float, ...]
    word: tuple[int, ...]
    tail_flips: int
    open_tail: bool
    degenerate: bool

    def symbol(self, j: int) -> int | None:
        """Completed sigma_j if known (0-based), else None."""
        if j < len(self.word):
            return self.word[j]
        return None

    def next_symbol_at_least(self, j: int, bound: int) -> bool:
        """Whether sigma_{j+1} >= bound is already certain."""
        nxt = self.symbol(j + 1)
        if nxt is not None:
            return nxt >= bound
        if len(self.word) == j + 1 and self.open_tail:
            return self.tail_flips >= bound
        return False


def _sample_args(alpha, params, p1, horizon, zeros_needed, rel_tol, abs_tol):
    return (
        float(alpha),
        params.s,
        params.q,
        params.R,
        tuple(float(v) for v in p1),
        float(horizon),
        int(zeros_needed),
        float(rel_tol),
        float(abs_tol),
    )


def _shoot_sample(args) -> _Sample:
    alpha, s, q, R, p1, horizon, zeros_needed, rel_tol, abs_tol = args
    params = Params(s, q, R)
    geometry = Geometry(params=params, p1=np.asarray(p1))
    start = geometry.segment_point(alpha)
    traj = integrate(
        start,
        params,
        IntegratorConfig(t_max=horizon, rel_tol=rel_tol, abs_tol=abs_tol),
        [
            EventSpec("X_ZERO", terminal_count=zeros_needed),
            EventSpec("XPRIME_SIGN_CHANGE"),
        ],
    )
    summary = summarize(traj)
    tail = summary.sigma[-1] if summary.open_tail else 0
    return _Sample(
        alpha=alpha,
        zeros=summary.x_zeros,
        word=summary.word,
        tail_flips=tail,
        open_tail=summary.open_tail,
        degenerate=summary.degenerate,
    )


def trace_word_at_alpha(
    alpha: float,
    params: Params,
    geometry: Geometry,
    horizon: float,
    n_letters: int,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
) -> _Sample:
    """Re-integrate one shooting start and return its trace data."""
    args = _sample_args(alpha, params, geometry.p1, horizon, n_letters + 2, rel_tol, abs_tol)
    return _shoot_sample(args)


@dataclass(frozen=True)
class LetterCertificate:
    """Evidence that one letter was realized on a subinterval."""

    letter_index: int
    target_letter: int
    interval_before: tuple[float, float]
    interval_after: tuple[float, float]
    anchor_alpha: float
    anchor_word: tuple[int, ...]
    anchor_tail_flips: int
    a_type_alpha: float | None
    b_type_alpha: float | None
    c_type_alpha: float | None
    horizon: float
    n_grid: int

    def to_jsonable(self) -> dict:
        return {
            "letter_index": self.letter_index,
            "target_letter": self.target_letter,
            "interval_before": list(self.interval_before),
            "interval_after": list(self.interval_after),
            "anchor_alpha": repr(self.anchor_alpha),
            "anchor_word": list(self.anchor_word),
            "anchor_tail_flips": self.anchor_tail_flips,
            "a_type_alpha": self.a_type_alpha,
            "b_type_alpha": self.b_type_alpha,
            "c_type_alpha": self.c_type_alpha,
            "horizon": self.horizon,
            "n_grid": self.n_grid,
        }


@dataclass
class ShootState:
    """Mutable induction state: current interval, certificates, scan log."""

    interval: tuple[float, float]
    realized_prefix: list[int] = field(default_factory=list)
    certificates: list[LetterCertificate] = field(default_factory=list)
    continuity_grid: list[tuple[float, tuple[int, ...]]] = field(default_factory=list)


@dataclass(frozen=True)
class ShootResult:
    alpha_interval: tuple[float, float]
    witness_alpha: float
    achieved_word: tuple[int, ...]
    certificates: tuple[LetterCertificate, ...]
    horizon_used: float
    interval_chain: tuple[tuple[float, float], ...]

    def to_jsonable(self) -> dict:
        return {
            "alpha_interval": [repr(self.alpha_interval[0]), repr(self.alpha_interval[1])],
            "witness_alpha": repr(self.witness_alpha),
            "achieved_word": list(self.achieved_word),
            "certificates": [c.to_jsonable() for c in self.certificates],
            "horizon_used": self.horizon_used,
            "interval_chain": [[a, b] for a, b in self.interval_chain],
        }


@dataclass(frozen=True)
class TransitionAlarm:
    alpha_left: float
    alpha_right: float
    letter_index: int
    sigma_left: int
    sigma_right: int


@dataclass(frozen=True)
class TransitionAuditReport:
    alarms: tuple[TransitionAlarm, ...]

    @property
    def clean(self) -> bool:
        return not self.alarms


def sigma_transition_audit(samples: list[_Sample]) -> TransitionAuditReport:
    """Flag adjacent grid samples whose completed symbols jump between >= 4
    and 1 at the same position; such a jump cannot happen continuously and
    means the grid skipped structure, so the caller should refine there.
    """
    alarms = []
    ordered = sorted(samples, key=lambda smp: smp.alpha)
    for left, right in zip(ordered, ordered[1:]):
        for j in range(min(len(left.word), len(right.word))):
            a, b = left.word[j], right.word[j]
            if (a >= 4 and b == 1) or (a == 1 and b >= 4):
                alarms.append(TransitionAlarm(left.alpha, right.alpha, j, a, b))
    return TransitionAuditReport(tuple(alarms))


@dataclass(frozen=True)
class EndpointBehaviorReport:
    """The two contrasting behaviors at the ends of the shooting segment."""

    near_one_alpha: float
    near_one_crosses_before_zero: bool
    near_one_first_flip_t: float | None
    near_one_first_zero_t: float
    near_zero_alpha: float
    near_zero_monotone_descent: bool
    near_zero_reaches_negative: bool
    near_zero_flips_after_first_zero: int

    @property
    def both_pass(self) -> bool:
        return (
            self.near_one_crosses_before_zero
            and self.near_zero_monotone_descent
            and self.near_zero_reaches_negative
            and self.near_zero_flips_after_first_zero >= 4
        )

    def to_jsonable(self) -> dict:
        return {
            "near_one_alpha": self.near_one_alpha,
            "near_one_crosses_before_zero": self.near_one_crosses_before_zero,
            "near_one_first_flip_t": self.near_one_first_flip_t,
            "near_one_first_zero_t": self.near_one_first_zero_t,
            "near_zero_alpha": self.near_zero_alpha,
            "near_zero_monotone_descent": self.near_zero_monotone_descent,
            "near_zero_reaches_negative": self.near_zero_reaches_negative,
            "near_zero_flips_after_first_zero": self.near_zero_flips_after_first_zero,
            "both_pass": self.both_pass,
        }


def endpoint_behaviors(
    params: Params,
    geometry: Geometry | None = None,
    horizon: float = 60.0,
    alpha_near_one: float = 0.999,
    alpha_near_zero: float = 0.01,
) -> EndpointBehaviorReport:
    """Check the two segment-end behaviors that bound the shooting argument.

    Near alpha = 1 the start is close to the equilibrium and the trajectory
    crosses the plane y = x (a flip of x') before x can reach zero.  Near
    alpha = 0 the start is close to p1: x descends monotonically through
    zero and then x' flips at least four times before the second zero.
    Requires the event ordering to hold at these parameters.
    """
    rep = check_condition_a(params)
    if not rep.holds:
        raise ConditionAFailed(
            f"event ordering does not hold at R={params.R}: {rep.failure_reason}"
        )
    geometry = geometry or build_geometry(params)

    traj = integrate(
        geometry.segment_point(alpha_near_one),
        params,
        IntegratorConfig(t_max=horizon),
        [EventSpec("X_ZERO", terminal_count=1), EventSpec("XPRIME_SIGN_CHANGE")],
    )
    flips = traj.event_times("XPRIME_SIGN_CHANGE")
    zeros = traj.event_times("X_ZERO")
    first_zero = zeros[0] if zeros else math.inf
    first_flip = flips[0] if flips else None
    crosses_first = first_flip is not None and first_flip < first_zero

    lo_traj = integrate(
        geometry.segment_point(alpha_near_zero),
        params,
        IntegratorConfig(t_max=horizon),
        [EventSpec("X_ZERO", terminal_count=2), EventSpec("XPRIME_SIGN_CHANGE")],
    )
    lo_zeros = lo_traj.event_times("X_ZERO")
    lo_flips = lo_traj.event_times("XPRIME_SIGN_CHANGE")
    monotone = False
    reaches = len(lo_zeros) >= 1
    flips_after = 0
    if reaches:
        t1 = lo_zeros[0]
        monotone = not any(t < t1 for t in lo_flips)
        t2 = lo_zeros[1] if len(lo_zeros) > 1 else math.inf
        flips_after = sum(1 for t in lo_flips if t1 < t < t2)

    return EndpointBehaviorReport(
        near_one_alpha=alpha_near_one,
        near_one_crosses_before_zero=crosses_first,
        near_one_first_flip_t=first_flip,
        near_one_first_zero_t=first_zero,
        near_zero_alpha=alpha_near_zero,
        near_zero_monotone_descent=monotone,
        near_zero_reaches_negative=reaches,
        near_zero_flips_after_first_zero=flips_after,
    )


def shoot_word(
    target: TargetWord,
    params: Params,
    config: ShootConfig | None = None,
    geometry: Geometry | None = None,
) -> ShootResult:
    """Find alpha whose trajectory realizes the target word symbol by symbol.

    Per letter: scan a fixed grid over the current interval, keep the
    contiguous run of samples whose prefix matches and whose current symbol
    equals the target letter, require an anchor inside the run whose next
    symbol is already >= 4, and shrink the interval to the run (padded by
    one grid gap).  Runs found empty trigger dyadic grid refinement before
    giving up.  Deterministic for a fixed config; grid scans go parallel
    only across workers configured via LORENZ_LAB_THREADS.
    """
    config = config or ShootConfig()
    if len(target) > config.max_letters:
        raise ValueError(
            f"words longer than {config.max_letters} exceed the precision wall"
        )
    rep = check_condition_a(params)
    if not rep.holds:
        raise ConditionAFailed(
            f"event ordering does not hold at R={params.R}: {rep.failure_reason}"
        )
    if not complex_pair_at_p0(params):
        raise ValueError(
            "the linearization at the positive equilibrium must have a complex pair"
        )
    geometry = geometry or build_geometry(params)

    state = ShootState(interval=(config.alpha_min, config.alpha_max))
    chain = [state.interval]
    horizon = config.horizon(0)

    for j, letter in enumerate(target.letters):
        horizon = config.horizon(j)
        zeros_needed = j + 3
        lo, hi = state.interval
        found_block: list[_Sample] | None = None
        samples: list[_Sample] = []

        for round_no in range(config.max_refine_rounds + 1):
            n_grid = (config.grid_points - 1) * (2**round_no) + 1
            alphas = np.linspace(lo, hi, n_grid)
            if hi - lo < config.alpha_resolution:
                break
            args = [
                _sample_args(a, params, geometry.p1, horizon, zeros_needed,
                             config.rel_tol, config.abs_tol)
                for a in alphas
            ]
            samples = _pool_map(_shoot_sample, args)
            state.continuity_grid = [(smp.alpha, smp.word) for smp in samples]

            prefix = tuple(target.letters[:j])
            eligible = [
                smp for smp in samples
                if smp.word[:j] == prefix and smp.symbol(j) is not None
            ]
            if not eligible:
                if all(len(smp.zeros) < j + 2 for smp in samples):
                    raise HorizonExhausted(
                        f"no sample produced zero #{j + 2} within horizon {horizon}"
                    )
                continue

            blocks = []
            run: list[_Sample] = []
            for smp in samples:
                ok = smp.word[:j] == prefix and smp.symbol(j) == letter
                if ok:
                    run.append(smp)
                elif run:
                    blocks.append(run)
                    run = []
            if run:
                blocks.append(run)

            anchored = [
                blk for blk in blocks
                if any(smp.next_symbol_at_least(j, 4) for smp in blk)
            ]
            if anchored:
                found_block = max(anchored, key=len)
                break

        if found_block is None:
            raise AnchorNotFound(
                j,
                f"letter {j} (target {letter}): no anchored grid run inside "
                f"[{lo}, {hi}] after {config.max_refine_rounds} refinements",
            )

        gap = (hi - lo) / max(1, n_grid - 1)
        anchors = [smp for smp in found_block if smp.next_symbol_at_least(j, 4)]
        anchor = anchors[len(anchors) // 2]

        def _find_type(value: int) -> float | None:
            for smp in samples:
                if (
                    smp.word[:j] == tuple(target.letters[:j])
                    and smp.symbol(j) == value
                    and smp.next_symbol_at_least(j, 4)
                ):
                    return smp.alpha
            return None

        def _find_c_type() -> float | None:
            for smp in samples:
                sym = smp.symbol(j)
                if (
                    smp.word[:j] == tuple(target.letters[:j])
                    and sym is not None
                    and sym >= 4
                    and smp.next_symbol_at_least(j, 4)
                ):
                    return smp.alpha
            return None

        new_lo = max(lo, found_block[0].alpha - gap)
        new_hi = min(hi, found_block[-1].alpha + gap)
        cert = LetterCertificate(
            letter_index=j,
            target_letter=letter,
            interval_before=(lo, hi),
            interval_after=(new_lo, new_hi),
            anchor_alpha=anchor.alpha,
            anchor_word=anchor.word,
            anchor_tail_flips=anchor.tail_flips,
            a_type_alpha=_find_type(1),
            b_type_alpha=_find_type(3),
            c_type_alpha=_find_c_type(),
            horizon=horizon,
            n_grid=len(samples),
        )
        state.certificates.append(cert)
        state.realized_prefix.append(letter)
        state.interval = (new_lo, new_hi)
        chain.append(state.interval)

    witness = state.certificates[-1].anchor_alpha
    final = trace_word_at_alpha(
        witness, params, geometry, horizon, len(target), config.rel_tol, config.abs_tol
    )
    achieved = final.word[: len(target)]

    return ShootResult(
        alpha_interval=state.interval,
        witness_alpha=witness,
        achieved_word=achieved,
        certificates=tuple(state.certificates),
        horizon_used=horizon,
        interval_chain=tuple(chain),
    )
