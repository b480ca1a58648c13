"""Distributed gradient-based coverage deployment for hybrid sensor networks."""

from .coverage import (
    CoverageRegion,
    DecompositionReport,
    LocalView,
    QuadratureConfig,
    decomposition_check,
    global_coverage,
    local_coverage,
    position_coverage,
    priority_integral,
    refined_cell,
    sensing_region,
    weighted_coverage_factor,
)
from .deployment import (
    AlgoParams,
    SensorState,
    candidate_position,
    run_deployment,
    sensor_round,
    step_size,
)
from .field import (
    PrioritySpec,
    SensingParams,
    SensorSpec,
    collective_probability,
    elfes_probability,
    priority,
)
from .geometry import (
    DomainError,
    EmptyRegionError,
    Point2,
    PolyRegion,
    ShadowEdge,
    SimplePolygon,
    occluding_vertices,
    polygonize_disk,
    project_to_region,
    region_intersect,
    region_subtract,
    visibility_region,
    voronoi_cell,
)
from .gradient import (
    GradientReport,
    fd_gradient,
    gradient_boundary,
    gradient_obstacle,
    gradient_surface,
    local_gradient,
)
from .netsim import CommGraph, RoundMessage, build_graph, deliver_round, is_connected, neighbors
from .render import render_svg
from .scenario import (
    Scenario,
    ScenarioError,
    parse_scenario,
    parse_trace,
    serialize_scenario,
    write_metrics_csv,
    write_trace_json,
)
from .trace import RunTrace, TraceRecord

__all__ = [name for name in dir() if not name.startswith("_")]
