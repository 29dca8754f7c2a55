"""Round-robin exchange harness.

A system profile models what a real CAD system does to a mesh on a
write/read cycle: coordinates are rounded to the system's decimal write
quantum (round-half-to-even) and nearly coincident vertices are welded on
read.  Starting from an input mesh, round j applies profile j mod n, so two
profiles alternate the way two systems exchanging a part would.

A property stabilizes at the first round whose value is exactly equal, in
full representation, to the previous round's value.  The summary renders
"Round l" for stabilized properties and "+k" for ones that never settled
within the requested k rounds.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import props
from .errors import AllDegenerate
from .fileio import dumps_off, sha256_hex
from .model import QueryableModel, TriangleMesh, weld
from .props import ManifoldnessReport, PropertyValue
from .proxy import build_interior_grid, build_point_cloud
from .template import TemplateFile

# serialization precision used for round digests; fine enough to represent
# any practical write quantum exactly
_DIGEST_DECIMALS = 12


@dataclass(frozen=True)
class SystemProfile:
    name: str
    write_quantum: float      # mm; 0 disables quantization
    weld_tolerance: float     # mm; 0 disables welding
    unit: str = "mm"

    @classmethod
    def from_template(cls, t: TemplateFile) -> SystemProfile:
        return cls(name=t.system_name,
                   write_quantum=t.write_precision,
                   weld_tolerance=t.read_precision,
                   unit=t.units)


@dataclass(frozen=True)
class StabilizedAt:
    round: int


@dataclass(frozen=True)
class NotStabilized:
    rounds: int


@dataclass(frozen=True)
class RoundRecord:
    index: int
    properties: dict[str, PropertyValue]
    digest: str


@dataclass(frozen=True)
class RoundRobinTrace:
    rounds: tuple[RoundRecord, ...]
    stabilization: dict[str, StabilizedAt | NotStabilized]


def roundtrip(mesh: TriangleMesh, profile: SystemProfile) -> TriangleMesh:
    """One write/read cycle through a system profile.

    Quantization uses round-half-to-even, so a second pass through the same
    profile reproduces the mesh bit for bit.
    """
    if profile.write_quantum < 0 or profile.weld_tolerance < 0:
        raise ValueError("profile quantum and weld tolerance must be >= 0")
    v = mesh.vertices
    if profile.write_quantum > 0:
        q = profile.write_quantum
        v = np.round(v / q) * q
    v, t = weld(v, mesh.triangles, tol=profile.weld_tolerance)
    if len(t) == 0:
        raise AllDegenerate(
            f"every triangle collapsed in the round trip through "
            f"{profile.name!r}")
    return TriangleMesh(v, t, provenance=mesh.provenance)


def detect_stabilization(values) -> StabilizedAt | NotStabilized:
    """First index whose value exactly repeats the previous one.

    The input is the per-round value sequence starting at round 0; when no
    consecutive pair matches, the sample count is reported back.
    """
    values = list(values)
    for idx in range(1, len(values)):
        if values[idx] == values[idx - 1]:
            return StabilizedAt(idx)
    return NotStabilized(len(values))


def render_stabilization(s: StabilizedAt | NotStabilized) -> str:
    if isinstance(s, StabilizedAt):
        return f"Round {s.round}"
    return f"+{s.rounds}"


def _round_properties(mesh: TriangleMesh, properties: tuple[str, ...],
                      epsilon: float, pmq_accuracy: float,
                      reference_cloud, seed: int, n_rays: int,
                      n_pairs: int) -> dict[str, PropertyValue]:
    model = QueryableModel(mesh)
    grid = None
    if {"volume", "centroid", "components", "convexity"} & set(properties):
        grid = build_interior_grid(model, epsilon, pmq_accuracy)
    out: dict[str, PropertyValue] = {}
    for kind in properties:
        if kind == "volume":
            out[kind] = props.volume(grid)
        elif kind == "centroid":
            out[kind] = props.centroid(grid)
        elif kind == "components":
            out[kind] = props.connected_components(grid)
        elif kind == "convexity":
            out[kind] = props.convexity(model, epsilon, pmq_accuracy,
                                        n_pairs=n_pairs, seed=seed,
                                        grid=grid)
        elif kind == "surface-area":
            out[kind] = props.surface_area(model, epsilon, pmq_accuracy,
                                           n_rays=n_rays, seed=seed)
        elif kind == "euler-characteristic":
            out[kind] = props.euler_characteristic(mesh)
        elif kind == "manifoldness":
            out[kind] = props.manifoldness(mesh)
        elif kind == "hausdorff":
            cloud = build_point_cloud(model, epsilon, pmq_accuracy)
            out[kind] = props.hausdorff(cloud, reference_cloud)
        else:
            raise ValueError(f"unknown property kind {kind!r}")
    return out


def run_rounds(mesh: TriangleMesh, profiles: list[SystemProfile], k: int,
               properties: tuple[str, ...], epsilon: float,
               pmq_accuracy: float, *, seed: int = 0, n_rays: int = 10_000,
               n_pairs: int = 2_000) -> RoundRobinTrace:
    """Exchange a mesh through the profiles k times and watch properties.

    Mesh-combinatorial properties (Euler characteristic, manifoldness) are
    read off each round's mesh directly; the rest go through the query
    proxies at a fixed epsilon and seed so that identical meshes always
    yield identical values.  The Hausdorff entry measures drift of each
    round's boundary against the round-0 boundary.
    """
    if k < 1:
        raise ValueError("at least one round is required")
    if not profiles:
        raise ValueError("at least one profile is required")

    reference_cloud = None
    if "hausdorff" in properties:
        reference_cloud = build_point_cloud(QueryableModel(mesh), epsilon,
                                            pmq_accuracy)

    records: list[RoundRecord] = []
    current = mesh
    for j in range(k + 1):
        if j > 0:
            current = roundtrip(current, profiles[j % len(profiles)])
        values = _round_properties(current, properties, epsilon,
                                   pmq_accuracy, reference_cloud, seed,
                                   n_rays, n_pairs)
        digest = sha256_hex(dumps_off(current, _DIGEST_DECIMALS))
        records.append(RoundRecord(index=j, properties=values,
                                   digest=digest))

    stabilization: dict[str, StabilizedAt | NotStabilized] = {}
    for kind in properties:
        status = detect_stabilization(
            [r.properties[kind] for r in records])
        if isinstance(status, NotStabilized):
            # the summary reports the requested round count
            status = NotStabilized(k)
        stabilization[kind] = status
    return RoundRobinTrace(rounds=tuple(records),
                           stabilization=stabilization)


def _csv_value(value: object) -> str:
    if isinstance(value, ManifoldnessReport):
        return (f"manifold={str(value.is_manifold).lower()};"
                f"naked={value.naked_edges};"
                f"nonmanifold_edges={value.nonmanifold_edges};"
                f"nonmanifold_vertices={value.nonmanifold_vertices}")
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return "(" + ", ".join(repr(x) for x in value) + ")"
    return repr(value)


def trace_csv(trace: RoundRobinTrace) -> str:
    """CSV rows (round, property, value, digest) for every round."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["round", "property", "value", "digest"])
    for record in trace.rounds:
        for kind, pv in record.properties.items():
            writer.writerow([record.index, kind, _csv_value(pv.value),
                             record.digest])
    return buf.getvalue()


def render_summary(trace: RoundRobinTrace) -> str:
    lines = ["Stabilized in:"]
    for kind, status in trace.stabilization.items():
        lines.append(f"  {kind}: {render_stabilization(status)}")
    return "\n".join(lines) + "\n"
