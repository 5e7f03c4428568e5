"""Crystalline elastic flow of admissible polygonal curves in the plane.

The flow couples the crystalline curvature of a curve whose segments lie on
Wulff-shape facet directions with an elastic penalty of strength alpha; it
reduces to a system of ODEs for the facet heights.  This package builds the
curves, integrates the height system with event-driven restarts when a
zero-curvature segment vanishes, and verifies the known stationary and
translating solutions for the square anisotropy.
"""

from .errors import (
    BadTopology,
    BuildError,
    CheckFailed,
    CrystalFlowError,
    DegenerateFacet,
    DegenerateSegment,
    DimensionMismatch,
    HalfLinesNotParallel,
    IndexOutOfRange,
    InsufficientSamples,
    InvalidClassParams,
    InvalidTriple,
    IOFailure,
    NonConvexWulff,
    NonzeroCurvatureCollapse,
    NotAdmissible,
    NotAdmissibleAfterMerge,
    NotClosed,
    NotParallel,
    NotStationary,
    OriginOutside,
    ParamOutOfRange,
    SchemaError,
    SegmentCollapse,
    StepUnderflow,
    TimeOutOfRange,
    WindowTooSmall,
    ZeroLengthSegment,
)
from .anisotropy import (
    Anisotropy,
    build_wulff,
    facets_adjacent,
    phi,
    phi_dual,
    regular_polygon_anisotropy,
    square_anisotropy,
)
from .curve import (
    AdmissibleCurve,
    build_curve,
    crystalline_curvature,
    curve_index,
    is_convex,
    lengths_from_heights,
    measure_heights,
    reconstruct_parallel,
    transition_number,
)
from .energy import (
    FlowParams,
    elastic_energy,
    facet_identity_residual,
    first_variation,
    segment_supports,
    stationary_energy_gap,
    windowed_lengths,
)
from .flow import (
    STATUS_CONVERGED,
    STATUS_MAX_TIME,
    STATUS_RUNNING,
    STATUS_TRANSLATING,
    FlowState,
    IntegratorOptions,
    RestartRecord,
    Sample,
    Trajectory,
    apriori_bounds,
    detect_vanishing,
    dissipation_residual,
    evolve,
    restart,
    rhs,
    step,
)
from .analysis import (
    ConvergenceReport,
    StationaryClass,
    TranslationReport,
    classify_stationary_square,
    convergence_monitor,
    make_nontranslating_two_rectangles,
    make_stationary_square_aniso,
    make_translating_square_aniso,
    stationarity_residual,
    translation_check,
)
from .cli import main as cli_main

__version__ = "0.1.0"

__all__ = [
    "Anisotropy",
    "AdmissibleCurve",
    "FlowParams",
    "FlowState",
    "IntegratorOptions",
    "Trajectory",
    "Sample",
    "RestartRecord",
    "StationaryClass",
    "TranslationReport",
    "ConvergenceReport",
    "build_wulff",
    "square_anisotropy",
    "regular_polygon_anisotropy",
    "phi",
    "phi_dual",
    "facets_adjacent",
    "build_curve",
    "transition_number",
    "crystalline_curvature",
    "curve_index",
    "is_convex",
    "lengths_from_heights",
    "reconstruct_parallel",
    "measure_heights",
    "segment_supports",
    "windowed_lengths",
    "elastic_energy",
    "first_variation",
    "facet_identity_residual",
    "stationary_energy_gap",
    "rhs",
    "step",
    "evolve",
    "apriori_bounds",
    "detect_vanishing",
    "restart",
    "dissipation_residual",
    "stationarity_residual",
    "make_stationary_square_aniso",
    "classify_stationary_square",
    "translation_check",
    "make_translating_square_aniso",
    "make_nontranslating_two_rectangles",
    "convergence_monitor",
    "cli_main",
    "STATUS_RUNNING",
    "STATUS_CONVERGED",
    "STATUS_MAX_TIME",
    "STATUS_TRANSLATING",
    # errors
    "CrystalFlowError",
    "NonConvexWulff",
    "OriginOutside",
    "DegenerateFacet",
    "IndexOutOfRange",
    "NotAdmissible",
    "DegenerateSegment",
    "BadTopology",
    "SegmentCollapse",
    "NotClosed",
    "DimensionMismatch",
    "NotParallel",
    "WindowTooSmall",
    "ZeroLengthSegment",
    "InvalidTriple",
    "StepUnderflow",
    "NonzeroCurvatureCollapse",
    "NotAdmissibleAfterMerge",
    "InsufficientSamples",
    "InvalidClassParams",
    "NotStationary",
    "HalfLinesNotParallel",
    "ParamOutOfRange",
    "SchemaError",
    "BuildError",
    "CheckFailed",
    "IOFailure",
    "TimeOutOfRange",
]
