"""Natural connections, Carnot frames and flattenings for (2,3) sub-Riemannian frames."""

__version__ = "0.1.0"

from .expr import Expr, EvaluationError, ParseError, parse
from .geometry import (
    Chart,
    CoframeError,
    GrowthVectorError,
    InconsistencyError,
    SubRiemannianStructure,
    VectorField,
    build_structure,
    lie_bracket,
    rotate_frame,
)
from .connection import (
    Connection,
    CurvatureData,
    DataConstraintError,
    TorsionData,
    check_compatibility,
    connection_from_data,
    covariant_derivative,
    curvature,
    natural_connection,
    parallel_transport,
    torsion,
)
from .normalize import (
    CarnotRequiredError,
    CarnotVerificationError,
    carnot_frame,
    flatten,
    normalize_chart_order2,
    normalize_chart_order3,
    vertical_direction,
)
from .manifest import ManifestError, load_manifest, parse_manifest

__all__ = [
    "Chart", "CoframeError", "Connection", "CurvatureData", "DataConstraintError", "EvaluationError",
    "Expr", "GrowthVectorError", "InconsistencyError", "ManifestError", "ParseError",
    "SubRiemannianStructure", "TorsionData", "VectorField", "CarnotRequiredError",
    "CarnotVerificationError", "build_structure", "carnot_frame", "check_compatibility",
    "connection_from_data", "covariant_derivative", "curvature", "flatten", "lie_bracket",
    "load_manifest", "natural_connection", "normalize_chart_order2", "normalize_chart_order3",
    "parallel_transport", "parse", "parse_manifest", "rotate_frame", "torsion", "vertical_direction",
]
