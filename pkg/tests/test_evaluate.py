"""Verdict rule and report rendering."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtest.errors import KindMismatch, NoProperties
from dtest.evaluate import (InteropReport, compare, compare_joint,
                            render_report, render_sidecar, render_value)
from dtest.props import ManifoldnessReport, PropertyValue


def pv(kind, value, err=0.0, witness=None):
    return PropertyValue(kind=kind, value=value, error_estimate=err,
                         witness=witness)


# ------------------------------------------------------------ verdict rule

def test_compatible_iff_within_tolerance():
    a, b = pv("volume", 10.0), pv("volume", 10.25)
    assert compare(a, b, 0.5).compatible
    assert compare(a, b, 0.25).compatible         # boundary included
    assert not compare(a, b, 0.2499).compatible
    assert compare(a, b, 0.5).difference == 0.25


def test_verdict_symmetric():
    a, b = pv("surface-area", 3.25, 0.1), pv("surface-area", 3.0, 0.2)
    r1, r2 = compare(a, b, 0.2), compare(b, a, 0.2)
    assert r1.compatible == r2.compatible
    assert r1.difference == r2.difference
    assert r1.combined_error == r2.combined_error


def test_verdict_monotone_in_tolerance():
    a, b = pv("volume", 1.0), pv("volume", 2.0)
    was_compatible = False
    for tol in (0.1, 0.5, 0.999, 1.0, 1.5, 10.0):
        r = compare(a, b, tol)
        assert not (was_compatible and not r.compatible)
        was_compatible = r.compatible
    assert was_compatible


def test_centroid_uses_euclidean_distance():
    a = pv("centroid", (0.0, 0.0, 0.0))
    b = pv("centroid", (1.0, 2.0, 2.0))
    r = compare(a, b, 3.0)
    assert r.difference == pytest.approx(3.0)
    assert r.compatible


@pytest.mark.parametrize("kind,v1,v2", [
    ("euler-characteristic", 2, 0),
    ("components", 1, 2),
    ("convexity", True, False),
    ("manifoldness", ManifoldnessReport(True, 0, 0, 0),
     ManifoldnessReport(False, 3, 0, 0)),
])
def test_discrete_kinds_ignore_tolerance(kind, v1, v2):
    r = compare(pv(kind, v1), pv(kind, v2), 1e9)
    assert not r.compatible
    assert r.difference is True
    r_eq = compare(pv(kind, v1), pv(kind, v1), 0.0)
    assert r_eq.compatible
    assert r_eq.difference is False


def test_warning_when_tolerance_below_combined_error():
    a, b = pv("volume", 5.0, 0.3), pv("volume", 5.1, 0.2)
    assert compare(a, b, 0.4).warning        # 0.4 < 0.5 combined
    assert not compare(a, b, 0.5).warning
    # the warning never flips the verdict
    assert compare(a, b, 0.4).compatible


def test_kind_mismatch():
    with pytest.raises(KindMismatch):
        compare(pv("volume", 1.0), pv("surface-area", 1.0), 0.1)


def test_negative_tolerance_rejected():
    with pytest.raises(ValueError):
        compare(pv("volume", 1.0), pv("volume", 1.0), -0.1)
    with pytest.raises(ValueError):
        compare_joint(pv("hausdorff", 1.0), -0.1)


def test_joint_comparison():
    r = compare_joint(pv("hausdorff", 0.25, err=0.05), 0.3)
    assert r.compatible and r.value1 is None and r.value2 is None
    assert r.difference == 0.25
    assert not compare_joint(pv("hausdorff", 0.35), 0.3).compatible


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(0, 1e6))
@settings(max_examples=300, deadline=None)
def test_verdict_rule_property(v1, v2, tol):
    r = compare(pv("volume", v1), pv("volume", v2), tol)
    assert r.compatible == (abs(v1 - v2) <= tol)


# -------------------------------------------------------------- rendering

def test_render_value_formats():
    assert render_value("volume", 1.5) == "1.50000000"
    assert render_value("components", 3) == "3"
    assert render_value("convexity", True) == "true"
    assert render_value("centroid", (1.0, 2.0, 3.0)) \
        == "(1.00000000, 2.00000000, 3.00000000)"
    assert render_value("manifoldness",
                        ManifoldnessReport(True, 0, 0, 0)) == "manifold"
    assert render_value("manifoldness",
                        ManifoldnessReport(False, 3, 1, 2)) \
        == ("not manifold (naked edges: 3, non-manifold edges: 1, "
            "non-manifold vertices: 2)")


def test_report_golden_incompatible_volume():
    r = compare(pv("volume", 476.73668518), pv("volume", 487.79770932),
                1e-4)
    report = InteropReport(system1="A", system2="B", model1="M1",
                           model2="M2", tolerance=1e-4, results=(r,))
    want = (
        "Volume:\n"
        "Systems A and B have incompatible volumes with a difference of "
        "11.06102414\n"
        "Volume of first proxy model: 476.73668518,\n"
        "Volume of second proxy model: 487.79770932\n"
        "\n"
        "Report:\n"
        "A and B that provide the respective models, M1 and M2, cannot "
        "interoperate in carrying out a task that allows using M1 and M2 "
        "interchangeably with the given accuracy ε for the specified "
        "property.\n"
    )
    assert render_report(report) == want


def test_report_golden_compatible_hausdorff():
    r = compare_joint(pv("hausdorff", 1.18016199), 2.0)
    report = InteropReport(system1="A", system2="B", model1="M1",
                           model2="M2", tolerance=2.0, results=(r,))
    text = render_report(report)
    assert ("Systems A and B have a compatible Hausdorff Distance of "
            "1.18016199\n") in text
    assert "can interoperate" in text
    assert "first proxy model" not in text     # joint: no per-model lines


def test_report_translated_header():
    r = compare(pv("volume", 1.0), pv("volume", 1.0), 0.1)
    report = InteropReport(system1="A", system2="B", model1="M1",
                           model2="M1t", tolerance=0.1, results=(r,),
                           translated=True)
    assert render_report(report).startswith(
        "Model M1t is a translated version of M1.\n")


def test_report_discrete_difference_phrasing():
    r = compare(pv("components", 1), pv("components", 2), 0.5)
    text = render_report(InteropReport("A", "B", "M1", "M2", 0.5, (r,)))
    assert ("Systems A and B have incompatible connected component counts "
            "with differing values\n") in text
    assert "Connected components of first proxy model: 1,\n" in text


def test_report_convexity_witness_line():
    w = ((0.1, 0.2, 0.3), (0.5, 0.6, 0.7), (0.3, 0.4, 0.5))
    r = compare(pv("convexity", False, witness=w), pv("convexity", True),
                0.0)
    text = render_report(InteropReport("A", "B", "M1", "M2", 0.0, (r,)))
    assert ("Non-convexity witness midpoint of model 1: "
            "(0.30000000, 0.40000000, 0.50000000)\n") in text


def test_report_warning_line():
    r = compare(pv("volume", 5.0, 0.3), pv("volume", 5.1, 0.25), 0.4)
    text = render_report(InteropReport("A", "B", "M1", "M2", 0.4, (r,)))
    assert ("Warning: tolerance below the combined error estimate of "
            "0.55000000; this verdict may not be reliable\n") in text


def test_report_requires_results():
    empty = InteropReport("A", "B", "M1", "M2", 0.1, ())
    with pytest.raises(NoProperties):
        render_report(empty)
    with pytest.raises(NoProperties):
        render_sidecar(empty)


def test_sidecar_records():
    r1 = compare(pv("volume", 1.0, 0.1), pv("volume", 1.5, 0.1), 0.2)
    r2 = compare(pv("components", 2), pv("components", 2), 0.0)
    text = render_sidecar(InteropReport("A", "B", "M1", "M2", 0.2,
                                        (r1, r2)))
    rec1, rec2 = text.rstrip("\n").split("\n\n")
    assert "property=volume" in rec1
    assert f"difference={0.5!r}" in rec1
    assert "compatible=false" in rec1
    assert "warning=false" in rec1
    assert "property=components" in rec2
    assert "difference=equal" in rec2
    assert "compatible=true" in rec2


def test_interop_report_aggregates():
    good = compare(pv("volume", 1.0), pv("volume", 1.0), 0.1)
    bad = compare(pv("components", 1), pv("components", 2), 0.1)
    rep = InteropReport("A", "B", "M1", "M2", 0.1, (good, bad))
    assert not rep.compatible
    assert InteropReport("A", "B", "M1", "M2", 0.1, (good,)).compatible
