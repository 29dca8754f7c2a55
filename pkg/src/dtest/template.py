"""System/model template files.

A template describes one CAD system (its tolerances, read/write precision,
PMQ accuracy, supported queries, units) together with the model it provides
(path, format, topological class, minimum feature size).  Templates are
stored as XML:

    <template>
      <system name="SystemA">
        <tolerance absolute="1e-5" angular="1e-2"/>
        <precision read="1e-6" write="1e-6" pmq="2e-1"/>
        <queries>PMQ,distance,integral</queries>
        <api>openNURBS</api>
        <scripting>Python</scripting>
        <units>mm</units>
      </system>
      <model path="coil.off" format="off">
        <topology class="non-convex solid"/>
        <min-feature-size>0.5</min-feature-size>
      </model>
    </template>

All lengths are converted to mm immediately after parsing, so every value
handed to the rest of the package is unit-normalized.
"""

from __future__ import annotations

import math
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace

from .errors import EmptyInterval, InvalidValue, MalformedXml, MissingField

UNIT_SCALE = {"mm": 1.0, "cm": 10.0, "m": 1000.0, "in": 25.4}

MODEL_FORMATS = ("off", "stl", "step", "csg")


@dataclass(frozen=True)
class TemplateFile:
    system_name: str
    absolute_tolerance: float        # mm, > 0
    angular_tolerance: float         # radians; carried but not consumed
    read_precision: float            # mm, >= 0
    write_precision: float           # mm, >= 0, a decimal quantum
    pmq_accuracy: float              # mm, >= 0
    supported_queries: tuple[str, ...]
    units: str
    topological_class: str
    min_feature_size: float          # mm, > 0
    model_path: str
    model_format: str
    api_options: tuple[str, ...] = ()
    scripting_languages: tuple[str, ...] = ()


@dataclass(frozen=True)
class BallRadiusInterval:
    lower: float
    upper: float
    epsilon: float


def _split_list(text: str | None) -> tuple[str, ...]:
    if text is None:
        return ()
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _require(elem: ET.Element | None, name: str) -> ET.Element:
    if elem is None:
        raise MissingField(name)
    return elem


def _attr(elem: ET.Element, attr: str, field: str) -> str:
    value = elem.get(attr)
    if value is None:
        raise MissingField(field)
    return value


def _number(text: str, field: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InvalidValue(field, f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise InvalidValue(field, "must be finite")
    return value


def parse_template_string(text: str | bytes) -> TemplateFile:
    """Parse template XML from a string and return a validated TemplateFile."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from None
    if root.tag != "template":
        raise MalformedXml(f"root element must be <template>, got <{root.tag}>")

    system = _require(root.find("system"), "system")
    model = _require(root.find("model"), "model")
    tolerance = _require(system.find("tolerance"), "tolerance")
    precision = _require(system.find("precision"), "precision")
    queries = _require(system.find("queries"), "queries")
    units_el = _require(system.find("units"), "units")
    topology = _require(model.find("topology"), "topology")
    feature = _require(model.find("min-feature-size"), "min-feature-size")

    name = system.get("name")
    if name is None:
        raise MissingField("system name")
    units = (units_el.text or "").strip()
    if units not in UNIT_SCALE:
        raise InvalidValue("units", f"unknown unit tag {units!r}")
    scale = UNIT_SCALE[units]

    t = TemplateFile(
        system_name=name,
        absolute_tolerance=_number(_attr(tolerance, "absolute",
                                         "tolerance absolute"),
                                   "tolerance absolute") * scale,
        angular_tolerance=_number(tolerance.get("angular", "0"),
                                  "tolerance angular"),
        read_precision=_number(_attr(precision, "read", "precision read"),
                               "precision read") * scale,
        write_precision=_number(_attr(precision, "write", "precision write"),
                                "precision write") * scale,
        pmq_accuracy=_number(_attr(precision, "pmq", "precision pmq"),
                             "precision pmq") * scale,
        supported_queries=_split_list(queries.text),
        units="mm",
        topological_class=_attr(topology, "class", "topology class"),
        min_feature_size=_number((feature.text or "").strip(),
                                 "min-feature-size") * scale,
        model_path=_attr(model, "path", "model path"),
        model_format=_attr(model, "format", "model format"),
        api_options=_split_list(system.findtext("api")),
        scripting_languages=_split_list(system.findtext("scripting")),
    )
    _validate(t)
    return t


def parse_template(path: str | os.PathLike) -> TemplateFile:
    with open(path, "rb") as fh:
        return parse_template_string(fh.read())


def _validate(t: TemplateFile) -> None:
    if not t.absolute_tolerance > 0:
        raise InvalidValue("tolerance absolute", "must be > 0")
    if t.read_precision < 0:
        raise InvalidValue("precision read", "must be >= 0")
    if t.write_precision < 0:
        raise InvalidValue("precision write", "must be >= 0")
    if t.pmq_accuracy < 0:
        raise InvalidValue("precision pmq", "must be >= 0")
    if not t.min_feature_size > 0:
        raise InvalidValue("min-feature-size", "must be > 0")
    if "PMQ" not in t.supported_queries:
        raise InvalidValue("queries", "system must support PMQ")
    if t.model_format not in MODEL_FORMATS:
        raise InvalidValue("model format",
                           f"expected one of {MODEL_FORMATS}")
    if not t.system_name:
        raise InvalidValue("system name", "must be non-empty")


def write_template(t: TemplateFile) -> str:
    """Serialize a TemplateFile to XML; parse_template_string inverts this."""
    root = ET.Element("template")
    system = ET.SubElement(root, "system", name=t.system_name)
    ET.SubElement(system, "tolerance",
                  absolute=repr(t.absolute_tolerance),
                  angular=repr(t.angular_tolerance))
    ET.SubElement(system, "precision",
                  read=repr(t.read_precision),
                  write=repr(t.write_precision),
                  pmq=repr(t.pmq_accuracy))
    ET.SubElement(system, "queries").text = ",".join(t.supported_queries)
    if t.api_options:
        ET.SubElement(system, "api").text = ",".join(t.api_options)
    if t.scripting_languages:
        ET.SubElement(system, "scripting").text = \
            ",".join(t.scripting_languages)
    ET.SubElement(system, "units").text = t.units
    model = ET.SubElement(root, "model",
                          path=t.model_path, format=t.model_format)
    ET.SubElement(model, "topology", {"class": t.topological_class})
    ET.SubElement(model, "min-feature-size").text = repr(t.min_feature_size)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def with_model(t: TemplateFile, path: str, fmt: str) -> TemplateFile:
    return replace(t, model_path=path, model_format=fmt)


def compute_ball_radius(t1: TemplateFile, t2: TemplateFile) \
        -> BallRadiusInterval:
    """Admissible ball radius for proxy construction from two templates.

    The radius must exceed every system's tolerance plus its worst
    read/write precision, and stay below every declared minimum feature
    size.  The geometric mean of the interval endpoints is chosen; it is
    clamped so the result lies strictly inside the open interval.
    """
    lower = max(t.absolute_tolerance + max(t.read_precision,
                                           t.write_precision)
                for t in (t1, t2))
    upper = min(t.min_feature_size for t in (t1, t2))
    if lower >= upper:
        raise EmptyInterval(
            f"no admissible ball radius: lower bound {lower!r} is not "
            f"below upper bound {upper!r}")
    epsilon = math.sqrt(lower * upper)
    epsilon = min(max(epsilon, math.nextafter(lower, math.inf)),
                  math.nextafter(upper, -math.inf))
    if not (lower < epsilon < upper):
        raise EmptyInterval(
            f"interval ({lower!r}, {upper!r}) contains no representable "
            f"radius")
    return BallRadiusInterval(lower, upper, epsilon)
