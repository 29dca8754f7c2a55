"""Property comparison and the interoperability report.

A pair of property values is compatible when their difference is within the
task tolerance; integer and boolean properties must match exactly and the
tolerance is ignored for them.  The Hausdorff distance is a joint property
of the two models, so it is judged directly against the tolerance instead
of being differenced.

Rendering is a pure function of the comparison results, so a report can be
regenerated byte-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import KindMismatch, NoProperties
from .props import DISCRETE_KINDS, ManifoldnessReport, PropertyValue

_NOUNS = {
    "volume": ("Volume", "volumes", "Volume"),
    "surface-area": ("Surface Area", "areas", "Surface area"),
    "centroid": ("Centroid", "centroids", "Centroid"),
    "hausdorff": ("Hausdorff Distance", None, None),
    "convexity": ("Convexity", "convexity verdicts", "Convexity"),
    "euler-characteristic": ("Euler Characteristic",
                             "Euler characteristics",
                             "Euler characteristic"),
    "components": ("Connected Components", "connected component counts",
                   "Connected components"),
    "manifoldness": ("Manifoldness", "manifoldness reports",
                     "Manifoldness"),
}


@dataclass(frozen=True)
class ComparisonResult:
    kind: str
    value1: PropertyValue | None      # None for joint properties
    value2: PropertyValue | None
    difference: object                # float, or bool "values differ"
    tolerance: float
    compatible: bool
    combined_error: float
    warning: bool


@dataclass(frozen=True)
class InteropReport:
    system1: str
    system2: str
    model1: str
    model2: str
    tolerance: float
    results: tuple[ComparisonResult, ...]
    translated: bool = False

    @property
    def compatible(self) -> bool:
        return all(r.compatible for r in self.results)

    @property
    def warning(self) -> bool:
        return any(r.warning for r in self.results)


def compare(p1: PropertyValue, p2: PropertyValue,
            tolerance: float) -> ComparisonResult:
    """Verdict for one property measured on each of the two models."""
    if p1.kind != p2.kind:
        raise KindMismatch(f"cannot compare {p1.kind} with {p2.kind}")
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    combined = p1.error_estimate + p2.error_estimate
    if p1.kind in DISCRETE_KINDS:
        differ = p1.value != p2.value
        return ComparisonResult(kind=p1.kind, value1=p1, value2=p2,
                                difference=differ, tolerance=tolerance,
                                compatible=not differ,
                                combined_error=combined,
                                warning=False)
    if p1.kind == "centroid":
        diff = math.dist(p1.value, p2.value)
    else:
        diff = abs(p1.value - p2.value)
    return ComparisonResult(kind=p1.kind, value1=p1, value2=p2,
                            difference=diff, tolerance=tolerance,
                            compatible=diff <= tolerance,
                            combined_error=combined,
                            warning=tolerance < combined)


def compare_joint(p: PropertyValue, tolerance: float) -> ComparisonResult:
    """Verdict for a property measured between the models (Hausdorff)."""
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    return ComparisonResult(kind=p.kind, value1=None, value2=None,
                            difference=float(p.value), tolerance=tolerance,
                            compatible=p.value <= tolerance,
                            combined_error=p.error_estimate,
                            warning=tolerance < p.error_estimate)


def render_value(kind: str, value: object) -> str:
    if isinstance(value, ManifoldnessReport):
        if value.is_manifold:
            return "manifold"
        return (f"not manifold (naked edges: {value.naked_edges}, "
                f"non-manifold edges: {value.nonmanifold_edges}, "
                f"non-manifold vertices: {value.nonmanifold_vertices})")
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, tuple):
        return "(" + ", ".join(f"{x:.8f}" for x in value) + ")"
    return f"{value:.8f}"


def _property_block(r: ComparisonResult, a: str, b: str) -> list[str]:
    header, plural, label = _NOUNS[r.kind]
    lines = [f"{header}:"]
    if r.kind == "hausdorff":
        word = "a compatible" if r.compatible else "an incompatible"
        lines.append(f"Systems {a} and {b} have {word} Hausdorff Distance "
                     f"of {r.difference:.8f}")
    else:
        word = "compatible" if r.compatible else "incompatible"
        if r.kind in DISCRETE_KINDS:
            shown = "no difference" if not r.difference \
                else "differing values"
            lines.append(f"Systems {a} and {b} have {word} {plural} "
                         f"with {shown}")
        else:
            lines.append(f"Systems {a} and {b} have {word} {plural} "
                         f"with a difference of {r.difference:.8f}")
        lines.append(f"{label} of first proxy model: "
                     f"{render_value(r.kind, r.value1.value)},")
        lines.append(f"{label} of second proxy model: "
                     f"{render_value(r.kind, r.value2.value)}")
        for idx, pv in ((1, r.value1), (2, r.value2)):
            if pv.witness is not None:
                lines.append(
                    f"Non-convexity witness midpoint of model {idx}: "
                    + render_value("centroid", pv.witness[2]))
    if r.warning:
        lines.append(f"Warning: tolerance below the combined error "
                     f"estimate of {r.combined_error:.8f}; this verdict "
                     f"may not be reliable")
    return lines


def render_report(report: InteropReport) -> str:
    """Human-readable interoperability report; deterministic output."""
    if not report.results:
        raise NoProperties("no property comparisons to report")
    a, b = report.system1, report.system2
    m1, m2 = report.model1, report.model2
    lines = []
    if report.translated:
        lines.append(f"Model {m2} is a translated version of {m1}.")
    for r in report.results:
        lines.extend(_property_block(r, a, b))
    lines.append("")
    lines.append("Report:")
    verb = "can" if report.compatible else "cannot"
    lines.append(
        f"{a} and {b} that provide the respective models, {m1} and {m2}, "
        f"{verb} interoperate in carrying out a task that allows using "
        f"{m1} and {m2} interchangeably with the given accuracy ε "
        f"for the specified property.")
    return "\n".join(lines) + "\n"


def render_sidecar(report: InteropReport) -> str:
    """Machine-readable records, one per comparison, stable key order."""
    if not report.results:
        raise NoProperties("no property comparisons to report")

    def flag(x: bool) -> str:
        return "true" if x else "false"

    records = []
    for r in report.results:
        if isinstance(r.difference, bool):
            diff = "unequal" if r.difference else "equal"
        else:
            diff = repr(r.difference)
        records.append("\n".join([
            f"property={r.kind}",
            "value1=" + (render_value(r.kind, r.value1.value)
                         if r.value1 is not None else ""),
            "value2=" + (render_value(r.kind, r.value2.value)
                         if r.value2 is not None else ""),
            f"difference={diff}",
            f"tolerance={report.tolerance!r}",
            f"compatible={flag(r.compatible)}",
            f"combined_error={r.combined_error!r}",
            f"warning={flag(r.warning)}",
        ]))
    return "\n\n".join(records) + "\n"
