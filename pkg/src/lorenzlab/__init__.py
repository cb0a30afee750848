"""Numerical laboratory for shooting analysis of a three-parameter
quadratic flow: event-certified integration, branch tracing, symbolic
words of derivative flips, and desk-scale validated enclosures.
"""

from .dynamics import (
    EmptyIntersection,
    EquilibriumSet,
    Geometry,
    Params,
    complex_pair_at_p0,
    ellipsoid_value,
    equilibria,
    jacobian,
    m_cap_e_extent,
    monitor_S_Q,
    rhs,
    state,
    unstable_eigenpair,
)
from .integrator import (
    BLOW_UP,
    EventRecord,
    EventSpec,
    IntegratorConfig,
    NoSignChange,
    OK,
    OutOfSpan,
    STEP_UNDERFLOW,
    TERMINAL_EVENT,
    Trajectory,
    integrate,
    locate_event,
    scan_scalar_crossings,
    segment_distance,
)
from .trace import (
    ALL_POSITIVE,
    BranchClass,
    CROSSES_ZERO,
    MissingEvents,
    TraceSummary,
    UNDETERMINED,
    classify_branch,
    summarize,
)
from .manifold import (
    CheckpointReport,
    MissingCheckpoint,
    NearHomoclinicReport,
    RStarResult,
    SameClassAtEndpoints,
    SeedConfig,
    branch_trajectory,
    checkpoint_report,
    find_r_star,
    near_homoclinic_diagnostics,
    seed_unstable_branch,
)
from .conditions import (
    ConditionAReport,
    ConditionBResult,
    NoCrossing,
    P1Result,
    REFERENCE_RANGES,
    SweepResult,
    build_geometry,
    check_condition_a,
    check_condition_b,
    condition_b_verdict_at,
    find_p1,
    sweep_condition_a,
)
from .sequence import (
    AnchorNotFound,
    ConditionAFailed,
    EndpointBehaviorReport,
    HorizonExhausted,
    LetterCertificate,
    ShootConfig,
    ShootResult,
    TargetWord,
    endpoint_behaviors,
    point_on_L,
    shoot_word,
    sigma_transition_audit,
)
from .validated import (
    Box,
    CERTIFIED_2A,
    CertifyResult,
    EnclosureRun,
    INCONCLUSIVE,
    Interval,
    ValidationFailed,
    certify_condition_b_segment,
    enclose_flow,
    interval_rhs,
)

__version__ = "0.1.0"
