"""Model file readers and writers.

Supported formats: OFF, ASCII STL, a tessellated subset of STEP Part 21
(COORDINATES_LIST + TRIANGULATED_* entities), and a JSON sidecar format for
CSG trees.  Mesh formats carry no unit tag and are taken to be mm; the CSG
format declares its unit and is converted on load.

Writers take an explicit decimal precision and emit fixed-point
coordinates, so the writer is the single place where quantization happens.
The Part 21 parser is total: any input either parses or raises
MalformedPart21, never anything else.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import (EmptyModel, MalformedPart21, NoTessellatedGeometry,
                     UnsupportedFormat)
from .model import (Box, CsgDifference, CsgIntersection, CsgLeaf, CsgNode,
                    CsgUnion, Cylinder, QueryableModel, Sphere, TriangleMesh,
                    weld)
from .template import UNIT_SCALE

_STEP_SCHEMA = "AP242_MANAGED_MODEL_BASED_3D_ENGINEERING_MIM_LF"


@dataclass(frozen=True)
class ModelFile:
    format: str
    model: QueryableModel
    digest: str


def _fmt(x: float, precision: int) -> str:
    s = f"{x:.{precision}f}"
    if s.startswith("-") and float(s) == 0:
        s = s[1:]  # avoid the "-0.0000" spelling
    return s


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# ---------------------------------------------------------------------------
# OFF

def dumps_off(mesh: TriangleMesh, precision: int) -> bytes:
    lines = ["OFF", f"{len(mesh.vertices)} {len(mesh.triangles)} 0"]
    for v in mesh.vertices:
        lines.append(" ".join(_fmt(c, precision) for c in v))
    for t in mesh.triangles:
        lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    return ("\n".join(lines) + "\n").encode("ascii")


def loads_off(data: bytes) -> TriangleMesh:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnsupportedFormat(f"OFF file is not valid text: {exc}") from None
    tokens_per_line = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens_per_line.append(line.split())
    flat = [tok for line in tokens_per_line for tok in line]
    if not flat or flat[0] != "OFF":
        raise UnsupportedFormat("missing OFF header")
    try:
        nv, nf = int(flat[1]), int(flat[2])
        pos = 4  # header, counts triple
        coords = [float(x) for x in flat[pos:pos + 3 * nv]]
        if len(coords) != 3 * nv:
            raise ValueError("truncated vertex list")
        vertices = np.array(coords, dtype=float).reshape(nv, 3)
        pos += 3 * nv
        faces: list[tuple[int, int, int]] = []
        for _ in range(nf):
            n = int(flat[pos])
            idx = [int(x) for x in flat[pos + 1:pos + 1 + n]]
            if len(idx) < n or n < 3:
                raise ValueError("truncated face record")
            if any(i < 0 or i >= nv for i in idx):
                raise ValueError("face index out of range")
            for k in range(1, n - 1):  # fan-triangulate n-gons
                faces.append((idx[0], idx[k], idx[k + 1]))
            pos += 1 + n
    except (ValueError, IndexError) as exc:
        raise UnsupportedFormat(f"malformed OFF file: {exc}") from None
    v, t = weld(vertices, np.array(faces, dtype=np.int64).reshape(-1, 3))
    return TriangleMesh(v, t, provenance="off")


# ---------------------------------------------------------------------------
# ASCII STL

def dumps_stl(mesh: TriangleMesh, precision: int,
              name: str = "model") -> bytes:
    v = mesh.vertices
    lines = [f"solid {name}"]
    for tri in mesh.triangles:
        a, b, c = v[tri[0]], v[tri[1]], v[tri[2]]
        n = np.cross(b - a, c - a)
        n = n / np.linalg.norm(n)
        lines.append("  facet normal "
                     + " ".join(_fmt(x, precision) for x in n))
        lines.append("    outer loop")
        for p in (a, b, c):
            lines.append("      vertex "
                         + " ".join(_fmt(x, precision) for x in p))
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    return ("\n".join(lines) + "\n").encode("ascii")


def loads_stl(data: bytes) -> TriangleMesh:
    """Read ASCII STL.  Facet normals are ignored and recomputed on write."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnsupportedFormat(f"STL file is not valid text: {exc}") from None
    coords: list[list[float]] = []
    saw_solid = False
    try:
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "solid":
                saw_solid = True
            elif parts[0] == "vertex":
                coords.append([float(x) for x in parts[1:4]])
                if len(coords[-1]) != 3:
                    raise ValueError("vertex record needs 3 coordinates")
    except ValueError as exc:
        raise UnsupportedFormat(f"malformed STL file: {exc}") from None
    if not saw_solid:
        raise UnsupportedFormat("missing 'solid' header")
    if len(coords) % 3 != 0:
        raise UnsupportedFormat("vertex count is not a multiple of 3")
    vertices = np.array(coords, dtype=float).reshape(-1, 3)
    triangles = np.arange(len(vertices), dtype=np.int64).reshape(-1, 3)
    v, t = weld(vertices, triangles)
    return TriangleMesh(v, t, provenance="stl")


# ---------------------------------------------------------------------------
# STEP Part 21 (tessellated subset)

@dataclass(frozen=True)
class Ref:
    """Reference to another entity instance (#id)."""
    id: int


@dataclass(frozen=True)
class EnumToken:
    name: str


class _Star:
    """The '*' (derived attribute) placeholder."""

    def __repr__(self):
        return "*"


STAR = _Star()


@dataclass(frozen=True)
class Part21Entity:
    keyword: str
    params: tuple


@dataclass(frozen=True)
class Part21File:
    header: tuple[Part21Entity, ...]
    entities: dict[int, Part21Entity]
    schema: str


_P21_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>/\*.*?\*/)
      | (?P<string>'(?:[^']|'')*')
      | (?P<ref>\#\d+)
      | (?P<enum>\.[A-Za-z0-9_]+\.)
      | (?P<number>[+-]?\d+(?:\.\d*)?(?:[Ee][+-]?\d+)?)
      | (?P<keyword>[A-Za-z_][A-Za-z0-9_\-]*)
      | (?P<punct>[=;(),*$])
    """,
    re.VERBOSE | re.DOTALL)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    line = 1
    while pos < len(text):
        m = _P21_TOKEN.match(text, pos)
        if m is None:
            raise MalformedPart21(
                f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append((kind, value, line))
        line += value.count("\n")
        pos = m.end()
    return tokens


class _P21Parser:
    def __init__(self, tokens: list[tuple[str, str, int]]):
        self.tokens = tokens
        self.pos = 0

    def _line(self) -> int:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][2]
        return self.tokens[-1][2] if self.tokens else 1

    def fail(self, message: str):
        raise MalformedPart21(message, self._line())

    def peek(self):
        if self.pos >= len(self.tokens):
            return None
        return self.tokens[self.pos]

    def next(self):
        tok = self.peek()
        if tok is None:
            raise MalformedPart21("unexpected end of input",
                                  self.tokens[-1][2] if self.tokens else 1)
        self.pos += 1
        return tok

    def expect_punct(self, ch: str):
        kind, value, line = self.next()
        if kind != "punct" or value != ch:
            raise MalformedPart21(f"expected {ch!r}, got {value!r}", line)

    def expect_keyword(self, word: str):
        kind, value, line = self.next()
        if kind != "keyword" or value != word:
            raise MalformedPart21(f"expected {word}, got {value!r}", line)

    def param_list(self, depth: int = 0) -> tuple:
        if depth > 200:
            self.fail("parameter nesting too deep")
        self.expect_punct("(")
        params = []
        tok = self.peek()
        if tok and tok[0] == "punct" and tok[1] == ")":
            self.next()
            return ()
        while True:
            params.append(self.param(depth + 1))
            kind, value, line = self.next()
            if kind == "punct" and value == ")":
                return tuple(params)
            if not (kind == "punct" and value == ","):
                raise MalformedPart21(
                    f"expected ',' or ')', got {value!r}", line)

    def param(self, depth: int):
        kind, value, line = self.next()
        if kind == "string":
            return value[1:-1].replace("''", "'")
        if kind == "ref":
            return Ref(int(value[1:]))
        if kind == "enum":
            return EnumToken(value[1:-1])
        if kind == "number":
            if "." in value or "e" in value or "E" in value:
                return float(value)
            return int(value)
        if kind == "punct" and value == "$":
            return None
        if kind == "punct" and value == "*":
            return STAR
        if kind == "punct" and value == "(":
            self.pos -= 1
            return self.param_list(depth)
        if kind == "keyword":
            # typed parameter: KEYWORD(...)
            return Part21Entity(value, self.param_list(depth))
        raise MalformedPart21(f"unexpected token {value!r}", line)

    def simple_record(self) -> Part21Entity:
        kind, value, line = self.next()
        if kind != "keyword":
            raise MalformedPart21(f"expected a keyword, got {value!r}", line)
        params = self.param_list()
        self.expect_punct(";")
        return Part21Entity(value, params)

    def data_record(self) -> tuple[int, Part21Entity]:
        kind, value, line = self.next()
        if kind != "ref":
            raise MalformedPart21(
                f"expected an entity id, got {value!r}", line)
        eid = int(value[1:])
        self.expect_punct("=")
        return eid, self.simple_record()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == "keyword" and tok[1] == word


def _collect_refs(param, out: set[int]):
    if isinstance(param, Ref):
        out.add(param.id)
    elif isinstance(param, tuple):
        for p in param:
            _collect_refs(p, out)
    elif isinstance(param, Part21Entity):
        _collect_refs(param.params, out)


def parse_part21(data: bytes | str) -> Part21File:
    """Parse STEP Part 21 text.

    Accepts either a fully framed exchange file or a bare sequence of data
    records.  Unknown entities are kept opaque.  Every failure raises
    MalformedPart21; no other exception escapes.
    """
    if isinstance(data, bytes):
        text = data.decode("latin-1")
    else:
        text = data
    try:
        parser = _P21Parser(_tokenize(text))
        header: tuple[Part21Entity, ...] = ()
        entities: dict[int, Part21Entity] = {}
        if parser.at_keyword("ISO-10303-21"):
            parser.next()
            parser.expect_punct(";")
            parser.expect_keyword("HEADER")
            parser.expect_punct(";")
            hdr = []
            while not parser.at_keyword("ENDSEC"):
                hdr.append(parser.simple_record())
            header = tuple(hdr)
            parser.next()
            parser.expect_punct(";")
            parser.expect_keyword("DATA")
            parser.expect_punct(";")
            while not parser.at_keyword("ENDSEC"):
                eid, ent = parser.data_record()
                if eid in entities:
                    parser.fail(f"duplicate entity id #{eid}")
                entities[eid] = ent
            parser.next()
            parser.expect_punct(";")
            parser.expect_keyword("END-ISO-10303-21")
            parser.expect_punct(";")
        else:
            while parser.peek() is not None:
                eid, ent = parser.data_record()
                if eid in entities:
                    parser.fail(f"duplicate entity id #{eid}")
                entities[eid] = ent
        if parser.peek() is not None:
            parser.fail(f"trailing content {parser.peek()[1]!r}")
    except RecursionError:
        raise MalformedPart21("nesting too deep") from None

    referenced: set[int] = set()
    for ent in entities.values():
        _collect_refs(ent.params, referenced)
    dangling = referenced - entities.keys()
    if dangling:
        raise MalformedPart21(
            f"dangling entity reference #{min(dangling)}")

    schema = ""
    for ent in header:
        if ent.keyword == "FILE_SCHEMA" and ent.params:
            names = ent.params[0]
            if isinstance(names, tuple) and names \
                    and isinstance(names[0], str):
                schema = names[0]
    return Part21File(header=header, entities=entities, schema=schema)


def _coordinate_list(ent: Part21Entity) -> np.ndarray | None:
    for param in ent.params:
        if isinstance(param, tuple) and param and all(
                isinstance(p, tuple) and len(p) == 3
                and all(isinstance(x, (int, float))
                        and not isinstance(x, bool) for x in p)
                for p in param):
            return np.array(param, dtype=float)
    return None


def extract_mesh(p21: Part21File) -> TriangleMesh:
    """Pull triangulated geometry out of a parsed Part 21 file.

    Looks for TRIANGULATED_* entities whose coordinates resolve to a
    COORDINATES_LIST; triangle indices are 1-based per the exchange
    structure.  A file with only B-rep geometry has nothing to extract.
    """
    all_vertices: list[np.ndarray] = []
    all_triangles: list[np.ndarray] = []
    offset = 0
    found = False
    for ent in sorted(p21.entities):
        entity = p21.entities[ent]
        if not entity.keyword.startswith("TRIANGULATED_"):
            continue
        found = True
        coords = None
        for param in entity.params:
            if isinstance(param, Ref):
                target = p21.entities[param.id]
                if target.keyword == "COORDINATES_LIST":
                    coords = _coordinate_list(target)
                    break
        if coords is None:
            raise MalformedPart21(
                f"#{ent}: no COORDINATES_LIST behind {entity.keyword}")
        if len(coords) == 0:
            raise EmptyModel(f"#{ent}: empty coordinate list")
        triangles = None
        for param in reversed(entity.params):
            if isinstance(param, tuple) and param and all(
                    isinstance(t, tuple) and len(t) == 3
                    and all(isinstance(i, int) and not isinstance(i, bool)
                            for i in t)
                    for t in param):
                triangles = np.array(param, dtype=np.int64)
                break
        if triangles is None:
            raise MalformedPart21(
                f"#{ent}: {entity.keyword} has no triangle index list")
        if triangles.min() < 1 or triangles.max() > len(coords):
            raise MalformedPart21(
                f"#{ent}: triangle index out of range")
        all_vertices.append(coords)
        all_triangles.append(triangles - 1 + offset)
        offset += len(coords)
    if not found:
        raise NoTessellatedGeometry(
            "the file contains no TRIANGULATED_* entities")
    vertices = np.vstack(all_vertices)
    triangles = np.vstack(all_triangles)
    v, t = weld(vertices, triangles)
    if len(t) == 0:
        raise EmptyModel("all extracted triangles are degenerate")
    return TriangleMesh(v, t, provenance="step")


def dumps_step(mesh: TriangleMesh, precision: int) -> bytes:
    def real(x: float) -> str:
        return _fmt(x, precision)

    points = ",".join(
        "(" + ",".join(real(c) for c in v) + ")" for v in mesh.vertices)
    tris = ",".join(
        f"({t[0] + 1},{t[1] + 1},{t[2] + 1})" for t in mesh.triangles)
    body = [
        "ISO-10303-21;",
        "HEADER;",
        "FILE_DESCRIPTION((''),'2;1');",
        "FILE_NAME('','',(''),(''),'','','');",
        f"FILE_SCHEMA(('{_STEP_SCHEMA}'));",
        "ENDSEC;",
        "DATA;",
        f"#1=COORDINATES_LIST('',{len(mesh.vertices)},({points}));",
        f"#2=TRIANGULATED_FACE_SET('',#1,$,$,({tris}));",
        "ENDSEC;",
        "END-ISO-10303-21;",
    ]
    return ("\n".join(body) + "\n").encode("ascii")


def loads_step(data: bytes) -> TriangleMesh:
    return extract_mesh(parse_part21(data))


# ---------------------------------------------------------------------------
# CSG JSON sidecar

def _primitive_to_json(prim, precision: int) -> dict:
    def vec(v):
        return [round(float(x), precision) for x in v]

    if isinstance(prim, Sphere):
        return {"kind": "sphere", "center": vec(prim.center),
                "radius": round(float(prim.radius), precision)}
    if isinstance(prim, Box):
        return {"kind": "box", "min": vec(prim.lo), "max": vec(prim.hi)}
    if isinstance(prim, Cylinder):
        return {"kind": "cylinder", "base": vec(prim.base),
                "axis": [float(x) for x in prim.axis],
                "radius": round(float(prim.radius), precision),
                "height": round(float(prim.height), precision)}
    raise TypeError(f"unknown primitive type: {type(prim).__name__}")


def _node_to_json(node: CsgNode, precision: int) -> dict:
    if isinstance(node, CsgLeaf):
        return {"op": "leaf",
                "primitive": _primitive_to_json(node.primitive, precision)}
    ops = {CsgUnion: "union", CsgIntersection: "intersection",
           CsgDifference: "difference"}
    return {"op": ops[type(node)],
            "left": _node_to_json(node.left, precision),
            "right": _node_to_json(node.right, precision)}


def dumps_csg(model: QueryableModel, precision: int) -> bytes:
    if model.is_mesh:
        raise UnsupportedFormat("the csg format cannot hold a mesh")
    doc = {"units": "mm", "root": _node_to_json(model.root, precision)}
    return (json.dumps(doc, indent=1, sort_keys=True) + "\n").encode("ascii")


def _primitive_from_json(doc: dict, scale: float):
    kind = doc["kind"]
    if kind == "sphere":
        return Sphere(np.array(doc["center"], dtype=float) * scale,
                      float(doc["radius"]) * scale)
    if kind == "box":
        return Box(np.array(doc["min"], dtype=float) * scale,
                   np.array(doc["max"], dtype=float) * scale)
    if kind == "cylinder":
        return Cylinder(np.array(doc["base"], dtype=float) * scale,
                        np.array(doc["axis"], dtype=float),
                        float(doc["radius"]) * scale,
                        float(doc["height"]) * scale)
    raise ValueError(f"unknown primitive kind {kind!r}")


def _node_from_json(doc: dict, scale: float) -> CsgNode:
    op = doc["op"]
    if op == "leaf":
        return CsgLeaf(_primitive_from_json(doc["primitive"], scale))
    classes = {"union": CsgUnion, "intersection": CsgIntersection,
               "difference": CsgDifference}
    if op not in classes:
        raise ValueError(f"unknown csg operation {op!r}")
    return classes[op](_node_from_json(doc["left"], scale),
                       _node_from_json(doc["right"], scale))


def loads_csg(data: bytes) -> QueryableModel:
    try:
        doc = json.loads(data)
        units = doc.get("units", "mm")
        if units not in UNIT_SCALE:
            raise ValueError(f"unknown unit tag {units!r}")
        root = _node_from_json(doc["root"], UNIT_SCALE[units])
    except (ValueError, KeyError, TypeError) as exc:
        raise UnsupportedFormat(f"malformed csg file: {exc}") from None
    return QueryableModel(root, units="mm")


# ---------------------------------------------------------------------------
# path-level API

_EXTENSIONS = {
    ".off": "off",
    ".stl": "stl",
    ".step": "step",
    ".stp": "step",
    ".p21": "step",
    ".json": "csg",
    ".csg": "csg",
}


def _sniff_format(path: str, data: bytes) -> str:
    ext = os.path.splitext(path)[1].lower()
    if ext in _EXTENSIONS:
        return _EXTENSIONS[ext]
    head = data.lstrip()[:16]
    if head.startswith(b"OFF"):
        return "off"
    if head.startswith(b"solid"):
        return "stl"
    if head.startswith(b"ISO-10303-21"):
        return "step"
    if head.startswith(b"{"):
        return "csg"
    raise UnsupportedFormat(f"cannot recognize the format of {path!r}")


def read_model(path: str | os.PathLike) -> ModelFile:
    """Read a model file; the format is inferred from extension or magic."""
    path = os.fspath(path)
    with open(path, "rb") as fh:
        data = fh.read()
    fmt = _sniff_format(path, data)
    if fmt == "off":
        model = QueryableModel(loads_off(data))
    elif fmt == "stl":
        model = QueryableModel(loads_stl(data))
    elif fmt == "step":
        model = QueryableModel(loads_step(data))
    else:
        model = loads_csg(data)
    return ModelFile(format=fmt, model=model, digest=sha256_hex(data))


def dumps_model(model: QueryableModel, fmt: str, precision: int) -> bytes:
    if fmt in ("off", "stl", "step") and not model.is_mesh:
        raise UnsupportedFormat(
            f"{fmt!r} stores meshes; this model is a CSG tree")
    if fmt == "csg" and model.is_mesh:
        raise UnsupportedFormat("'csg' stores CSG trees, not meshes")
    if fmt == "off":
        return dumps_off(model.root, precision)
    if fmt == "stl":
        return dumps_stl(model.root, precision)
    if fmt == "step":
        return dumps_step(model.root, precision)
    if fmt == "csg":
        return dumps_csg(model, precision)
    raise UnsupportedFormat(f"unknown format tag {fmt!r}")


def write_model(m: ModelFile | QueryableModel, path: str | os.PathLike,
                precision: int, fmt: str | None = None) -> int:
    """Write a model; returns the number of bytes written."""
    path = os.fspath(path)
    model = m.model if isinstance(m, ModelFile) else m
    if fmt is None:
        if isinstance(m, ModelFile):
            fmt = m.format
        else:
            ext = os.path.splitext(path)[1].lower()
            if ext not in _EXTENSIONS:
                raise UnsupportedFormat(
                    f"cannot infer a format from {path!r}")
            fmt = _EXTENSIONS[ext]
    data = dumps_model(model, fmt, precision)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def cloud_to_off(points: np.ndarray, precision: int = 9) -> bytes:
    """Vertices-only OFF, used to dump proxy point clouds for inspection."""
    lines = ["OFF", f"{len(points)} 0 0"]
    for p in points:
        lines.append(" ".join(_fmt(c, precision) for c in p))
    return ("\n".join(lines) + "\n").encode("ascii")
