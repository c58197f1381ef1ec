"""Numerical connectivity, Axiom-A, and homology-witness analysis of
polynomial skew products f(z, w) = (p(z), q(z, w)) on the projective plane."""

from .classify import (
    AxiomAReport,
    ClassifyConfig,
    ConnectivityReport,
    DichotomyReport,
    Witness,
    axiom_a_check,
    check_base_critical,
    check_fiber_critical,
    check_infinity_critical,
    classify_connectivity,
    fatou_dichotomy,
    replay_witness,
    report_to_dict,
)
from .current_link import (
    LinkingResult,
    MeasureEstimate,
    Region,
    harmonic_measure,
    homology_certificate,
    linking_case2,
    witness_cycles,
)
from .errors import SkewfatouError
from .poly_core import (
    FiberPoly,
    Poly1,
    SkewProduct,
    infinity_map,
    map_to_document,
    parse_map,
    roots,
    vertical_critical_w,
    vertical_derivative,
    vertical_preimages,
)
from .potential import (
    EscapeParams,
    GreenValue,
    Membership,
    PotentialEvaluator,
    escape_params,
    green_base,
    green_fiber,
    green_full,
    green_relative,
    in_K,
    make_evaluator,
)
from .sets import (
    Cycle,
    PointCloud,
    attracting_cycles,
    fiber_return_map,
    min_distance,
    postcritical_cloud,
    sample_J2,
    sample_J_base,
    sample_J_fiber,
    sample_J_infinity,
)

__version__ = "0.1.0"
