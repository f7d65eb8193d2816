"""Exact deformation quantization engine on cotangent charts with
Clifford variables: truncated jets, Moyal-Clifford graded algebra,
abelian connection recursion, flat sections and star products."""

from .scalars import GR_I, GR_ONE, GR_ZERO, RATIONAL_BACKEND, GaussianRational, parse_rational, rational
from .jets import BaseJet, jet_mul, jet_partial
from .algebra import (
    INF,
    Element,
    HbarFloorError,
    Monomial,
    ShapeMismatchError,
    clifford_quantization,
    clifford_symbol,
    filtration_degree,
    get_hbar_floor,
    mc_product,
    omega_matrix,
    parity,
    set_hbar_floor,
    so_matrix_to_spin,
    sp_matrix_to_weyl,
    supercommutator,
)
from .geometry import (
    ChartGeometry,
    GeometryError,
    ValidationReport,
    from_christoffel,
    from_metric_jets,
    geometry_to_dict,
    load_geometry,
    preset_constant_curvature,
    preset_flat,
    validate,
)
from .engine import (
    CentralObstructionError,
    ChartOperators,
    EngineConsistencyError,
    FedosovConnection,
    FormSeries,
    NotClosedError,
    OrderError,
    abelian_connection,
    canonical_omega_element,
    curvature,
    delta,
    delta_inv,
    exterior_d,
    flat_extension,
    full_symbol,
    solve_delta,
    star,
    validity_order,
)
from .expressions import ParseError, format_element, format_form_series, parse_expr, parse_form_series
from .verify import CheckRow, r1_prefactors, run_all, star_expansion_constant

__version__ = "0.1.0"

__all__ = [
    "GaussianRational", "rational", "parse_rational", "RATIONAL_BACKEND",
    "GR_ZERO", "GR_ONE", "GR_I",
    "BaseJet", "jet_mul", "jet_partial",
    "Element", "Monomial", "INF",
    "mc_product", "supercommutator",
    "clifford_symbol", "clifford_quantization",
    "sp_matrix_to_weyl", "so_matrix_to_spin", "omega_matrix",
    "filtration_degree", "parity",
    "set_hbar_floor", "get_hbar_floor",
    "HbarFloorError", "ShapeMismatchError",
    "ChartGeometry", "GeometryError", "ValidationReport",
    "preset_flat", "preset_constant_curvature",
    "from_metric_jets", "from_christoffel",
    "load_geometry", "geometry_to_dict", "validate",
    "ChartOperators", "FormSeries", "FedosovConnection",
    "delta", "delta_inv", "solve_delta", "exterior_d",
    "canonical_omega_element", "abelian_connection", "curvature",
    "flat_extension", "full_symbol", "star", "validity_order",
    "EngineConsistencyError", "NotClosedError",
    "CentralObstructionError", "OrderError",
    "ParseError", "parse_expr", "parse_form_series",
    "format_form_series", "format_element",
    "CheckRow", "run_all", "r1_prefactors", "star_expansion_constant",
]
