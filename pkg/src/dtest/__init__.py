"""Kernel-independent interoperability testing for CAD models.

Models are treated as black boxes answering point membership queries; the
package builds query-derived proxies (interior grids, boundary clouds,
unions of balls), measures geometric and topological properties on them,
and renders compatibility verdicts.  A round-robin harness watches how
properties degrade when a mesh is exchanged repeatedly between systems.
"""

from .errors import (AllDegenerate, DTestError, EmptyCloud, EmptyInterval,
                     EmptyModel, GridTooLarge, InvalidValue, KindMismatch,
                     MalformedPart21, MalformedXml, MissingField,
                     NonClosedMesh, NoProperties, NoTessellatedGeometry,
                     UnsupportedFormat)
from .evaluate import (ComparisonResult, InteropReport, compare,
                       compare_joint, render_report, render_sidecar)
from .fileio import ModelFile, dumps_model, read_model, write_model
from .model import (Box, Classification, CsgDifference, CsgIntersection,
                    CsgLeaf, CsgNode, CsgUnion, Cylinder, PmqResult,
                    QueryableModel, Sphere, TriangleMesh, bounding_box,
                    classify_batch, distance, pmq, signed_membership, weld)
from .props import (ManifoldnessReport, PropertyValue, connected_components,
                    convexity, centroid, euler_characteristic, hausdorff,
                    manifoldness, surface_area, volume)
from .proxy import (InteriorGrid, PointCloud, UnionOfBalls, balls_contain,
                    build_interior_grid, build_point_cloud,
                    build_union_of_balls, occupied_points)
from .roundrobin import (NotStabilized, RoundRobinTrace, StabilizedAt,
                         SystemProfile, detect_stabilization,
                         render_summary, roundtrip, run_rounds, trace_csv)
from .template import (BallRadiusInterval, TemplateFile, compute_ball_radius,
                       parse_template, parse_template_string, write_template)

__version__ = "0.1.0"

__all__ = [
    "AllDegenerate", "BallRadiusInterval", "Box", "Classification",
    "ComparisonResult", "CsgDifference", "CsgIntersection", "CsgLeaf",
    "CsgNode", "CsgUnion", "Cylinder", "DTestError", "EmptyCloud",
    "EmptyInterval", "EmptyModel", "GridTooLarge", "InteriorGrid",
    "InteropReport", "InvalidValue", "KindMismatch", "MalformedPart21",
    "MalformedXml", "ManifoldnessReport", "MissingField", "ModelFile",
    "NoProperties", "NoTessellatedGeometry", "NonClosedMesh",
    "NotStabilized", "PmqResult", "PointCloud", "PropertyValue",
    "QueryableModel", "RoundRobinTrace", "Sphere", "StabilizedAt",
    "SystemProfile", "TemplateFile", "TriangleMesh", "UnionOfBalls",
    "UnsupportedFormat", "balls_contain", "bounding_box",
    "build_interior_grid", "build_point_cloud", "build_union_of_balls",
    "centroid", "classify_batch", "compare", "compare_joint",
    "compute_ball_radius", "connected_components", "convexity",
    "detect_stabilization", "distance", "dumps_model",
    "euler_characteristic", "hausdorff", "manifoldness", "occupied_points",
    "parse_template", "parse_template_string", "pmq", "read_model",
    "render_report", "render_sidecar", "render_summary", "roundtrip",
    "run_rounds", "signed_membership", "surface_area", "trace_csv",
    "volume", "weld", "write_model", "write_template",
]
