"""Write/read degradation harness."""

from __future__ import annotations

import csv
import io

import numpy as np
import pytest

from dtest.errors import AllDegenerate
from dtest.model import TriangleMesh
from dtest.roundrobin import (NotStabilized, StabilizedAt, SystemProfile,
                              detect_stabilization, render_stabilization,
                              render_summary, roundtrip, run_rounds,
                              trace_csv)
from dtest.template import parse_template_string

from conftest import box_mesh

TEMPLATE = """<template>
  <system name="SysQ">
    <tolerance absolute="1e-5" angular="0"/>
    <precision read="1e-6" write="1e-4" pmq="1e-2"/>
    <queries>PMQ</queries>
    <units>mm</units>
  </system>
  <model path="m.off" format="off">
    <topology class="solid"/>
    <min-feature-size>0.5</min-feature-size>
  </model>
</template>"""


def test_profile_from_template():
    p = SystemProfile.from_template(parse_template_string(TEMPLATE))
    assert p.name == "SysQ"
    assert p.write_quantum == 1e-4     # write precision quantizes
    assert p.weld_tolerance == 1e-6    # read precision welds
    assert p.unit == "mm"


# -------------------------------------------------------------- roundtrip

def test_roundtrip_quantizes():
    mesh = TriangleMesh(
        np.array([[0.12345678, 0.0, 0.0], [1.0, 0.0, 0.0],
                  [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]))
    out = roundtrip(mesh, SystemProfile("A", 1e-4, 0.0))
    assert out.vertices[0, 0] == pytest.approx(0.1235, abs=1e-15)


def test_roundtrip_rounds_half_to_even():
    # dyadic coordinates make the tie exact: 0.375/0.25 = 1.5 -> 2,
    # 0.125/0.25 = 0.5 -> 0
    mesh = TriangleMesh(
        np.array([[0.375, 0.0, 0.0], [2.0, 0.0, 0.0],
                  [0.125, 2.0, 0.0], [0.0, 0.0, 2.0]]),
        np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]))
    out = roundtrip(mesh, SystemProfile("A", 0.25, 0.0))
    assert out.vertices[0, 0] == 0.5
    assert out.vertices[2, 0] == 0.0


def test_roundtrip_zero_quantum_is_identity(cube):
    out = roundtrip(cube, SystemProfile("A", 0.0, 0.0))
    assert np.array_equal(out.vertices, cube.vertices)
    assert np.array_equal(out.triangles, cube.triangles)


def test_roundtrip_idempotent(cube):
    prof = SystemProfile("A", 1e-4, 1e-6)
    noisy = TriangleMesh(cube.vertices + 1.7e-5, cube.triangles)
    once = roundtrip(noisy, prof)
    twice = roundtrip(once, prof)
    assert np.array_equal(once.vertices, twice.vertices)
    assert np.array_equal(once.triangles, twice.triangles)


def test_roundtrip_welds_close_vertices(cube):
    # split one corner into two copies 5e-7 apart; the read weld heals it
    verts = np.vstack([cube.vertices, cube.vertices[7] + 5e-7])
    tris = cube.triangles.copy()
    tris[2, 2] = 8      # the [4,6,7] face now uses the duplicate corner
    split = TriangleMesh(verts, tris)
    out = roundtrip(split, SystemProfile("A", 0.0, 1e-6))
    assert len(out.vertices) == 8
    assert len(out.triangles) == 12


def test_roundtrip_all_degenerate(cube):
    small = TriangleMesh(cube.vertices * 1e-6, cube.triangles)
    with pytest.raises(AllDegenerate):
        roundtrip(small, SystemProfile("A", 1.0, 0.0))


def test_roundtrip_preserves_provenance(cube):
    tagged = TriangleMesh(cube.vertices, cube.triangles, provenance="off")
    assert roundtrip(tagged, SystemProfile("A", 1e-4, 0.0)).provenance \
        == "off"


# ----------------------------------------------------------- stabilization

def test_detect_stabilization_examples():
    assert detect_stabilization([5, 5]) == StabilizedAt(1)
    assert detect_stabilization([5, 4, 4]) == StabilizedAt(2)
    assert detect_stabilization([1, 2, 3]) == NotStabilized(3)
    assert detect_stabilization([7]) == NotStabilized(1)
    assert detect_stabilization([1, 2, 2, 3]) == StabilizedAt(2)


def test_render_stabilization():
    assert render_stabilization(StabilizedAt(3)) == "Round 3"
    assert render_stabilization(NotStabilized(10)) == "+10"


def test_single_profile_stabilizes_by_round_two(cube):
    noisy = TriangleMesh(cube.vertices + 1.3e-5, cube.triangles)
    prof = SystemProfile("A", 1e-4, 1e-6)
    trace = run_rounds(noisy, [prof], 4,
                       ("volume", "euler-characteristic"), 0.1, 0.01)
    for status in trace.stabilization.values():
        assert isinstance(status, StabilizedAt)
        assert status.round <= 2
    # files are byte-identical from round 1 onward
    digests = [r.digest for r in trace.rounds]
    assert len(set(digests[1:])) == 1


def test_alternating_incommensurate_profiles_oscillate(cube):
    # quantum 0.15 sends 1.0 to 1.05; quantum 0.1 sends it back
    profs = [SystemProfile("A", 0.1, 0.0), SystemProfile("B", 0.15, 0.0)]
    k = 6
    trace = run_rounds(cube, profs, k, ("volume", "centroid"), 0.06, 0.005)
    for status in trace.stabilization.values():
        assert status == NotStabilized(k)
    digests = [r.digest for r in trace.rounds]
    # the mesh alternates between two states, never two equal in a row
    assert digests[0] == digests[2] == digests[4]
    assert digests[1] == digests[3] == digests[5]
    assert digests[0] != digests[1]
    assert render_summary(trace).count(f"+{k}") == 2


def test_drift_then_stabilize(cube):
    # a duplicated corner vertex welds away in round 1, changing the
    # mesh topology once; afterwards the roundtrip is a fixed point
    verts = np.vstack([cube.vertices, cube.vertices[7] + 5e-7])
    tris = cube.triangles.copy()
    tris[2, 2] = 8
    split = TriangleMesh(verts, tris)
    prof = SystemProfile("A", 1e-4, 1e-6)
    trace = run_rounds(split, [prof], 5,
                       ("euler-characteristic", "manifoldness"), 0.1, 0.01)
    for kind in ("euler-characteristic", "manifoldness"):
        values = [r.properties[kind] for r in trace.rounds]
        assert values[0] != values[1]          # the weld changed topology
        assert trace.stabilization[kind] == StabilizedAt(2)
    summary = render_summary(trace)
    assert "euler-characteristic: Round 2" in summary


def test_hausdorff_tracks_drift_from_round_zero(cube):
    prof = SystemProfile("A", 1e-4, 1e-6)
    trace = run_rounds(cube, [prof], 2, ("hausdorff",), 0.1, 0.01)
    # an already-quantized mesh never moves, so drift stays exactly zero
    values = [r.properties["hausdorff"].value for r in trace.rounds]
    assert values == [0.0, 0.0, 0.0]
    assert trace.stabilization["hausdorff"] == StabilizedAt(1)


def test_run_rounds_validation(cube):
    with pytest.raises(ValueError):
        run_rounds(cube, [], 3, ("volume",), 0.1, 0.01)
    with pytest.raises(ValueError):
        run_rounds(cube, [SystemProfile("A", 0.0, 0.0)], 0, ("volume",),
                   0.1, 0.01)
    with pytest.raises(ValueError):
        run_rounds(cube, [SystemProfile("A", 0.0, 0.0)], 1, ("nope",),
                   0.1, 0.01)


def test_trace_csv_shape(cube):
    prof = SystemProfile("A", 1e-4, 1e-6)
    trace = run_rounds(cube, [prof], 2, ("volume", "components"), 0.1, 0.01)
    rows = list(csv.reader(io.StringIO(trace_csv(trace))))
    assert rows[0] == ["round", "property", "value", "digest"]
    assert len(rows) == 1 + 3 * 2      # header + (k+1) rounds * 2 properties
    assert [r[0] for r in rows[1:]] == ["0", "0", "1", "1", "2", "2"]
    # values are parseable and digests match the per-round records
    for row in rows[1:]:
        idx = int(row[0])
        assert row[3] == trace.rounds[idx].digest
    float(rows[1][2])
    assert rows[2][2] == "1"           # component count serializes as int
