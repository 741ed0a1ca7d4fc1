"""Best proximity points and pairs on convex body pairs in lp spaces."""

from .errors import (
    DimensionMismatchError,
    DomainError,
    InstanceFormatError,
    PreconditionError,
    ProjectionConvergenceError,
    ProxipairError,
    UnboundedBodyError,
    UnsupportedProjectionError,
)
from .geometry import (
    Ball,
    Box,
    ConvexBody,
    DistanceResult,
    Halfspace,
    Hyperplane,
    Intersection,
    LpSpace,
    Polytope,
    ProximityInstance,
    contains,
    distance_between,
    norm,
    project,
    project_many,
    proximal_membership,
)
from .instances import (
    BuiltInstance,
    InstanceDoc,
    build,
    builtin_instance,
    generate_random_instance,
    load_instance,
    parse_instance,
    serialize_instance,
)
from .mappings import (
    ContractionCertificate,
    MapSpec,
    ModeCheck,
    NonexpansiveCheck,
    apply,
    certify_contraction,
    certify_mode,
    certify_relatively_nonexpansive,
    flip_mode,
)
from .operators import (
    CommutationReport,
    ComposedMap,
    ProjectorReport,
    PropertyCheck,
    ProximalProjector,
    check_commutation,
    compose_with_projector,
    proximal_project,
    verify_projector_properties,
)
from .solvers import (
    IterationTrace,
    SolveResult,
    TraceStep,
    noncyclic_projection_iteration,
    picard_cyclic,
    solve_cyclic_via_reduction,
    solve_noncyclic_via_reduction,
)
from .verification import CheckResult, VerificationReport, run_verification

__version__ = "0.1.0"
