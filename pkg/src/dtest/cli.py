"""Command line interface.

Two modes share one entry point:

    dtest TEMPLATE1 TEMPLATE2 TEST TOLERANCE [options]
        Load the two template files, build query proxies for the models
        they name, compare the requested property (or all of them) and
        print the interoperability report.

    dtest roundrobin MODEL --profile TEMPLATE [--profile TEMPLATE ...]
        Exchange a mesh repeatedly through the given system profiles and
        report the round at which each watched property stabilizes.

Exit status is 0 when the verdict is compatible, 1 when incompatible, and
2 on any usage or processing error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import props
from .errors import DTestError, UnsupportedFormat
from .evaluate import (ComparisonResult, InteropReport, compare,
                       compare_joint, render_report, render_sidecar)
from .fileio import ModelFile, cloud_to_off, read_model
from .model import QueryableModel
from .proxy import build_interior_grid, build_point_cloud, occupied_points
from .roundrobin import (SystemProfile, render_summary, run_rounds,
                         trace_csv)
from .template import TemplateFile, compute_ball_radius, parse_template

TEST_NAMES = ("volume", "surface-area", "hausdorff-distance", "centroid",
              "convexity", "euler-characteristic", "components",
              "manifoldness", "all")

# CLI test name -> internal property kind
_KIND_OF = {name: name for name in TEST_NAMES if name != "all"}
_KIND_OF["hausdorff-distance"] = "hausdorff"

_ALL_ORDER = ("volume", "surface-area", "hausdorff", "centroid",
              "convexity", "euler-characteristic", "components",
              "manifoldness")


class _ModelContext:
    """One model plus its lazily built proxies and query parameters."""

    def __init__(self, template: TemplateFile, model_file: ModelFile,
                 epsilon: float, seed: int, n_rays: int, n_pairs: int):
        self.template = template
        self.file = model_file
        self.model: QueryableModel = model_file.model
        self.epsilon = epsilon
        self.accuracy = template.pmq_accuracy
        self.seed = seed
        self.n_rays = n_rays
        self.n_pairs = n_pairs
        self._grid = None
        self._cloud = None

    @property
    def grid(self):
        if self._grid is None:
            self._grid = build_interior_grid(self.model, self.epsilon,
                                             self.accuracy)
        return self._grid

    @property
    def cloud(self):
        if self._cloud is None:
            self._cloud = build_point_cloud(self.model, self.epsilon,
                                            self.accuracy, grid=self.grid)
        return self._cloud

    def property_value(self, kind: str) -> props.PropertyValue:
        if kind == "volume":
            return props.volume(self.grid)
        if kind == "centroid":
            return props.centroid(self.grid)
        if kind == "components":
            return props.connected_components(self.grid)
        if kind == "euler-characteristic":
            return props.euler_characteristic(self.grid)
        if kind == "convexity":
            return props.convexity(self.model, self.epsilon, self.accuracy,
                                   n_pairs=self.n_pairs, seed=self.seed,
                                   grid=self.grid)
        if kind == "surface-area":
            return props.surface_area(self.model, self.epsilon,
                                      self.accuracy, n_rays=self.n_rays,
                                      seed=self.seed)
        if kind == "manifoldness":
            if not self.model.is_mesh:
                raise UnsupportedFormat(
                    "manifoldness needs a mesh model; "
                    f"{self.file.format!r} provides none")
            return props.manifoldness(self.model.root)
        raise ValueError(f"unknown property kind {kind!r}")


def _resolve_model_path(template_path: str, model_path: str) -> str:
    """Model paths in a template are relative to the template file."""
    if os.path.isabs(model_path):
        return model_path
    return os.path.join(os.path.dirname(os.path.abspath(template_path)),
                        model_path)


def _expand_tests(name: str, ctx1: _ModelContext,
                  ctx2: _ModelContext) -> list[str]:
    if name != "all":
        return [_KIND_OF[name]]
    kinds = list(_ALL_ORDER)
    if not (ctx1.model.is_mesh and ctx2.model.is_mesh):
        # manifoldness is a mesh-combinatorial notion; solid-only backends
        # have nothing to check
        kinds.remove("manifoldness")
    return kinds


def _dump_proxies(prefix: str, contexts: list[_ModelContext]) -> list[str]:
    written = []
    for i, ctx in enumerate(contexts, start=1):
        if ctx._grid is not None:
            path = f"{prefix}-model{i}-interior.off"
            with open(path, "wb") as fh:
                fh.write(cloud_to_off(occupied_points(ctx.grid)))
            written.append(path)
        if ctx._cloud is not None:
            path = f"{prefix}-model{i}-boundary.off"
            with open(path, "wb") as fh:
                fh.write(cloud_to_off(ctx.cloud.points))
            written.append(path)
    return written


def _run_compare(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="dtest",
        description="Compare a property of two models for interoperability.")
    parser.add_argument("template1", help="template XML of the first system")
    parser.add_argument("template2", help="template XML of the second system")
    parser.add_argument("test", choices=TEST_NAMES, metavar="TEST",
                        help="property to compare, or 'all' "
                             f"(one of: {', '.join(TEST_NAMES)})")
    parser.add_argument("tolerance", type=float,
                        help="compatibility tolerance for the property")
    parser.add_argument("--epsilon", type=float, default=None,
                        help="proxy accuracy; defaults to the ball radius "
                             "derived from the two templates")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rays", type=int, default=100_000,
                        help="ray count for the surface area estimate")
    parser.add_argument("--pairs", type=int, default=10_000,
                        help="point pair count for the convexity test")
    parser.add_argument("--dump-proxy", metavar="PREFIX", default=None,
                        help="write the proxies that were built as OFF "
                             "point clouds with this path prefix")
    parser.add_argument("--sidecar", metavar="PATH", default=None,
                        help="also write machine-readable records here")
    parser.add_argument("--translated", action="store_true",
                        help="note that the second model is a translation "
                             "of the first")
    args = parser.parse_args(argv)

    t1 = parse_template(args.template1)
    t2 = parse_template(args.template2)
    if args.epsilon is None:
        epsilon = compute_ball_radius(t1, t2).epsilon
    else:
        if args.epsilon <= 0:
            raise ValueError("--epsilon must be positive")
        epsilon = args.epsilon

    m1 = read_model(_resolve_model_path(args.template1, t1.model_path))
    m2 = read_model(_resolve_model_path(args.template2, t2.model_path))
    ctx1 = _ModelContext(t1, m1, epsilon, args.seed, args.rays, args.pairs)
    ctx2 = _ModelContext(t2, m2, epsilon, args.seed, args.rays, args.pairs)

    results: list[ComparisonResult] = []
    for kind in _expand_tests(args.test, ctx1, ctx2):
        if kind == "hausdorff":
            joint = props.hausdorff(ctx1.cloud, ctx2.cloud)
            results.append(compare_joint(joint, args.tolerance))
        else:
            results.append(compare(ctx1.property_value(kind),
                                   ctx2.property_value(kind),
                                   args.tolerance))

    report = InteropReport(system1=t1.system_name, system2=t2.system_name,
                           model1=os.path.basename(t1.model_path),
                           model2=os.path.basename(t2.model_path),
                           tolerance=args.tolerance,
                           results=tuple(results),
                           translated=args.translated)
    sys.stdout.write(render_report(report))
    if args.sidecar:
        with open(args.sidecar, "w", encoding="ascii") as fh:
            fh.write(render_sidecar(report))
    if args.dump_proxy:
        for path in _dump_proxies(args.dump_proxy, [ctx1, ctx2]):
            sys.stdout.write(f"Wrote {path}\n")
    return 0 if report.compatible else 1


def _run_roundrobin(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="dtest roundrobin",
        description="Exchange a mesh through system profiles and report "
                    "when each property stabilizes.")
    parser.add_argument("model", help="mesh model file to start from")
    parser.add_argument("--profile", action="append", required=True,
                        metavar="TEMPLATE",
                        help="template XML of a participating system; "
                             "repeat to alternate systems")
    parser.add_argument("--rounds", type=int, default=10,
                        help="number of exchange rounds (default 10)")
    parser.add_argument("--properties", default="volume",
                        help="comma separated property list to watch")
    parser.add_argument("--out", default="trace.csv",
                        help="trace CSV output path (default trace.csv)")
    parser.add_argument("--epsilon", type=float, default=None,
                        help="proxy accuracy; defaults to the ball radius "
                             "derived from the first and last profiles")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rays", type=int, default=10_000)
    parser.add_argument("--pairs", type=int, default=2_000)
    args = parser.parse_args(argv)

    templates = [parse_template(p) for p in args.profile]
    profiles = [SystemProfile.from_template(t) for t in templates]
    kinds = []
    for name in args.properties.split(","):
        name = name.strip()
        if not name:
            continue
        if name not in _KIND_OF:
            parser.error(f"unknown property {name!r}")
        kinds.append(_KIND_OF[name])
    if not kinds:
        parser.error("no properties to watch")

    if args.epsilon is None:
        epsilon = compute_ball_radius(templates[0], templates[-1]).epsilon
    else:
        if args.epsilon <= 0:
            raise ValueError("--epsilon must be positive")
        epsilon = args.epsilon
    accuracy = max(t.pmq_accuracy for t in templates)

    model_file = read_model(args.model)
    if not model_file.model.is_mesh:
        raise UnsupportedFormat("round robin needs a mesh model")

    trace = run_rounds(model_file.model.root, profiles, args.rounds,
                       tuple(kinds), epsilon, accuracy, seed=args.seed,
                       n_rays=args.rays, n_pairs=args.pairs)
    with open(args.out, "w", encoding="ascii", newline="") as fh:
        fh.write(trace_csv(trace))
    sys.stdout.write(render_summary(trace))
    sys.stdout.write(f"Trace written to {args.out}\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        if argv and argv[0] == "roundrobin":
            return _run_roundrobin(argv[1:])
        return _run_compare(argv)
    except DTestError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
