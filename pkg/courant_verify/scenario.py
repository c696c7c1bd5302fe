"""Scenario files: schema, loading with reference resolution, and the check runner.

A scenario is a JSON document naming charts, algebras, backends, bivectors,
maps, pseudo-connections and relations, followed by an ordered list of
checks. Every check returns a VerificationReport; ``run`` turns those into
a Report with one verdict per check.
"""

import json
import logging
from typing import Callable, Dict, List, Optional, Sequence

import jsonschema
import sympy

from .courantcore import (
    ActionBackend,
    Bivector,
    ExactBackend,
    PointBackend,
    ProductBackend,
    Section,
    compare_brackets,
    coisotropic_stabilizers,
    conjugate,
    koszul_bracket,
    poisson_graph_frame,
    poisson_jacobiator,
    relocate,
    verify_axioms,
)
from .errors import CourantVerifyError, NonCleanCompositionError, ScenarioError, UnresolvedReferenceError
from .exactcalc import POINT, Chart, ChartMap, KForm, VectorField, interior, render, scalar
from .linalgrel import check_ann_lemma
from .parsers import parse_form, parse_matrix, parse_point, parse_rational, parse_scalar, parse_scalar_matrix, parse_vector_field
from .pseudodirac import (
    LieAlgebroidData,
    PseudoConnection,
    SubbundleFrame,
    action_subalgebra,
    check_curvature_form,
    check_jacobi_defect,
    check_lie_algebroid,
    check_metric_compatibility,
    check_tensoriality,
    conjugate_connection,
    cotangent_connection,
    flat_sections_check,
    induced_lie_algebroid,
    is_pseudo_dirac,
    metric_connection,
    same_structure,
    torsion,
    twist,
    two_form_matrix,
)
from .quadlie import (
    QuadLieAlgebra,
    SubalgebraSpec,
    abelian,
    check_matched_pair,
    check_subalgebra,
    direct_sum,
    double,
    is_lagrangian_subalgebra,
    semidirect_dual,
    sl2,
    verify_quadlie,
)
from .relcompose import (
    CourantRelation,
    action_decomposition,
    action_decomposition_formula,
    backward_image,
    check_fiber_composition,
    check_involutive_along_support,
    check_lagrangian as check_relation_lagrangian,
    check_transverse_pair,
    composition_identity,
    diagonal_morphism,
    fiberwise_lie_morphism,
    forward_image,
    graph_relation,
    identity_relation,
    manin_pair_morphism,
    morphism_check,
    psi_map,
    pullback_formula,
    q_poisson,
    transverse_pair,
    transverse_target,
)
from .report import ERROR, FAIL, PASS, CheckResult, Report, VerificationReport
from .tangentpro import (
    TangentProlongation,
    build_vb_dirac,
    check_correspondence,
    check_involutive,
    check_lagrangian as check_vb_lagrangian,
    check_linear_bracket,
    extract_connection,
    verify_lift_calculus,
)
from .utils import DEFAULT_SAMPLES, DEFAULT_SEED, safe_points, sample_points, timed

logger = logging.getLogger(__name__)

SCENARIO_VERSION = 1

_NAME = {"type": "string", "minLength": 1}
_RATIONAL = {"type": ["string", "integer"]}
_SCALAR = {
    "oneOf": [
        {"type": "string"},
        {"type": "integer"},
        {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["coeff", "exponents"],
                "properties": {
                    "coeff": _RATIONAL,
                    "exponents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                },
            },
        },
    ]
}
_FORM = {
    "type": "array",
    "items": {
        "type": "object",
        "additionalProperties": False,
        "required": ["indices", "scalar"],
        "properties": {
            "indices": {"type": "array", "items": {"type": ["string", "integer"]}},
            "scalar": _SCALAR,
        },
    },
}
_ELEMENT = {"type": "object", "additionalProperties": _RATIONAL}
_SECTION = {"oneOf": [{"type": "array", "items": _SCALAR}, {"type": "object", "additionalProperties": _SCALAR}]}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _RATIONAL}}
_SCALAR_MATRIX = {"type": "array", "items": {"type": "array", "items": _SCALAR}}


def _entity(kinds: Sequence[str], properties: dict, required: Sequence[str] = ()) -> dict:
    props = {"kind": {"enum": list(kinds)}}
    props.update(properties)
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["kind"] + list(required),
        "properties": props,
    }


SCENARIO_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "name", "checks"],
    "properties": {
        "version": {"const": SCENARIO_VERSION},
        "name": _NAME,
        "description": {"type": "string"},
        "settings": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
        },
        "charts": {"type": "object", "additionalProperties": {"type": "array", "items": _NAME, "uniqueItems": True}},
        "algebras": {
            "type": "object",
            "additionalProperties": _entity(
                ["custom", "sl2", "abelian", "semidirect_dual", "double", "direct_sum"],
                {
                    "labels": {"type": "array", "items": _NAME},
                    "brackets": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["left", "right", "value"],
                            "properties": {"left": _NAME, "right": _NAME, "value": _ELEMENT},
                        },
                    },
                    "metric": _MATRIX,
                    "algebra": _NAME,
                    "conjugate": {"type": "boolean"},
                },
            ),
        },
        "subalgebras": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "required": ["algebra", "vectors"],
                "properties": {"algebra": _NAME, "vectors": {"type": "array", "items": _ELEMENT}},
            },
        },
        "backends": {
            "type": "object",
            "additionalProperties": _entity(
                ["exact", "action", "point", "product", "conjugate", "relocated"],
                {
                    "chart": _NAME,
                    "gamma": _FORM,
                    "algebra": _NAME,
                    "rho": {"type": "object", "additionalProperties": _SECTION},
                    "first": _NAME,
                    "second": _NAME,
                    "base": _NAME,
                },
            ),
        },
        "bivectors": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "required": ["chart", "brackets"],
                "properties": {
                    "chart": _NAME,
                    "brackets": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["left", "right", "value"],
                            "properties": {"left": _NAME, "right": _NAME, "value": _SCALAR},
                        },
                    },
                },
            },
        },
        "maps": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "required": ["source", "target", "components"],
                "properties": {"source": _NAME, "target": _NAME, "components": {"type": "array", "items": _SCALAR}},
            },
        },
        "points": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "required": ["chart", "points"],
                "properties": {
                    "chart": _NAME,
                    "points": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _RATIONAL}},
                },
            },
        },
        "connections": {
            "type": "object",
            "additionalProperties": _entity(
                [
                    "frame",
                    "poisson",
                    "koszul",
                    "metric",
                    "action_subalgebra",
                    "twist",
                    "conjugate",
                    "backward_image",
                    "forward_image",
                    "transverse",
                    "action_decomposition",
                    "extracted",
                ],
                {
                    "backend": _NAME,
                    "sections": {"type": "array", "items": _SECTION},
                    "A": {"type": "array", "items": {"type": "array", "items": {"type": "array", "items": _SCALAR}}},
                    "bivector": _NAME,
                    "g": _SCALAR_MATRIX,
                    "omega": _FORM,
                    "eta": _FORM,
                    "gamma": _FORM,
                    "subalgebra": _NAME,
                    "connection": _NAME,
                    "relation": _NAME,
                    "inverse": _NAME,
                    "first": _NAME,
                    "second": _NAME,
                    "e": _NAME,
                    "f": _NAME,
                    "name": {"type": "string"},
                },
            ),
        },
        "relations": {
            "type": "object",
            "additionalProperties": _entity(
                ["graph", "diagonal", "identity", "manin", "frame"],
                {
                    "map": _NAME,
                    "gamma_source": _FORM,
                    "gamma_target": _FORM,
                    "backend": _NAME,
                    "subalgebra": _NAME,
                    "source": _NAME,
                    "target": _NAME,
                    "support": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["kind"],
                        "properties": {"kind": {"enum": ["graph", "point"]}, "map": _NAME},
                    },
                    "frame": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["target", "source"],
                            "properties": {"target": _SECTION, "source": _SECTION},
                        },
                    },
                },
            ),
        },
        "checks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "kind"],
                "properties": {
                    "name": _NAME,
                    "kind": {"type": "string"},
                    "params": {"type": "object"},
                },
            },
        },
    },
}

# field -> section it refers to, per section of the document
REFERENCES = {
    "algebras": {"algebra": "algebras"},
    "subalgebras": {"algebra": "algebras"},
    "backends": {"chart": "charts", "algebra": "algebras", "base": "backends", "first": "backends", "second": "backends"},
    "bivectors": {"chart": "charts"},
    "maps": {"source": "charts", "target": "charts"},
    "points": {"chart": "charts"},
    "connections": {
        "backend": "backends",
        "bivector": "bivectors",
        "subalgebra": "subalgebras",
        "connection": "connections",
        "relation": "relations",
        "inverse": "maps",
        "first": "connections",
        "second": "connections",
        "e": "subalgebras",
        "f": "subalgebras",
    },
    "relations": {
        "map": "maps",
        "backend": "backends",
        "subalgebra": "subalgebras",
        "source": "backends",
        "target": "backends",
    },
}
PARAM_REFERENCES = {
    "algebra": "algebras",
    "subalgebra": "subalgebras",
    "e": "subalgebras",
    "f": "subalgebras",
    "g": "subalgebras",
    "h": "subalgebras",
    "backend": "backends",
    "connection": "connections",
    "target": "connections",
    "expect": "connections",
    "first": "connections",
    "second": "connections",
    "relation": "relations",
    "bivector": "bivectors",
    "inverse": "maps",
    "points": "points",
}
# derived pseudo-connections are built on first use
DERIVED_CONNECTIONS = {"backward_image", "forward_image", "transverse", "action_decomposition", "extracted"}

CHECKS: Dict[str, Callable] = {}


def check(kind: str):
    def register(handler):
        CHECKS[kind] = handler
        return handler

    return register


class Scenario:
    """A validated scenario document with lazily built named objects."""

    def __init__(self, data: dict, source: str = "<memory>"):
        self.data = data
        self.source = source
        self.name = data["name"]
        settings = data.get("settings", {})
        self.samples = settings.get("samples", DEFAULT_SAMPLES)
        self.seed = settings.get("seed", DEFAULT_SEED)
        self.checks = data["checks"]
        self._built: Dict[tuple, object] = {}
        self._building: set = set()

    # reference handling

    def spec(self, section: str, name: str, path=()) -> dict:
        entries = self.data.get(section, {})
        if name not in entries:
            raise UnresolvedReferenceError(f"undefined {section[:-1]} {name!r}", path)
        return entries[name]

    def check_references(self):
        for section, fields in REFERENCES.items():
            for name, spec in self.data.get(section, {}).items():
                for field, target in fields.items():
                    if field in spec:
                        self.spec(target, spec[field], (section, name, field))
                support = spec.get("support", {}) if section == "relations" else {}
                if "map" in support:
                    self.spec("maps", support["map"], (section, name, "support", "map"))
        for i, entry in enumerate(self.checks):
            if entry["kind"] not in CHECKS:
                raise ScenarioError(f"unknown check kind {entry['kind']!r}", ("checks", i, "kind"))
            for field, value in entry.get("params", {}).items():
                target = PARAM_REFERENCES.get(field)
                if target and isinstance(value, str):
                    self.spec(target, value, ("checks", i, "params", field))

    def build_all(self):
        """Build every object that does not need a composition."""
        for section in ("charts", "algebras", "subalgebras", "backends", "bivectors", "maps", "points", "relations"):
            for name in self.data.get(section, {}):
                self.get(section, name)
        for name, spec in self.data.get("connections", {}).items():
            if spec["kind"] not in DERIVED_CONNECTIONS:
                self.get("connections", name)

    def get(self, section: str, name: str, path=()):
        key = (section, name)
        if key in self._built:
            return self._built[key]
        if key in self._building:
            raise ScenarioError(f"{section[:-1]} {name!r} refers to itself", path or (section, name))
        spec = self.spec(section, name, path)
        self._building.add(key)
        try:
            value = getattr(self, f"_build_{section}")(name, spec, (section, name))
        finally:
            self._building.discard(key)
        self._built[key] = value
        logger.debug(f"built {section[:-1]} {name!r}")
        return value

    # builders

    def _build_charts(self, name, spec, path):
        return Chart(name, tuple(spec))

    def _build_algebras(self, name, spec, path):
        kind = spec["kind"]
        if kind == "sl2":
            return sl2()
        if kind == "double":
            return double(self.get("algebras", spec["algebra"], path + ("algebra",)))
        if kind == "direct_sum":
            return direct_sum(self.get("algebras", spec["algebra"], path + ("algebra",)), spec.get("conjugate", True))
        if kind == "abelian":
            return abelian(parse_matrix(spec["metric"], path + ("metric",)), spec.get("labels"), name)
        labels = spec.get("labels")
        if not labels:
            raise ScenarioError("labels are required", path)
        brackets = []
        for i, entry in enumerate(spec.get("brackets", [])):
            here = path + ("brackets", i)
            for field in ("left", "right"):
                if entry[field] not in labels:
                    raise UnresolvedReferenceError(f"undefined label {entry[field]!r}", here + (field,))
            value = {}
            for label, c in entry["value"].items():
                if label not in labels:
                    raise UnresolvedReferenceError(f"undefined label {label!r}", here + ("value", label))
                value[label] = parse_rational(c, here + ("value", label))
            brackets.append((entry["left"], entry["right"], value))
        if kind == "semidirect_dual":
            return semidirect_dual(labels, brackets, name)
        if "metric" not in spec:
            raise ScenarioError("metric is required", path)
        return QuadLieAlgebra.from_brackets(labels, brackets, parse_matrix(spec["metric"], path + ("metric",)), name)

    def _element(self, algebra: QuadLieAlgebra, value: dict, path) -> tuple:
        for label in value:
            if label not in algebra.labels:
                raise UnresolvedReferenceError(f"undefined label {label!r} of {algebra.name}", path + (label,))
        return algebra.element({label: parse_rational(c, path + (label,)) for label, c in value.items()})

    def _build_subalgebras(self, name, spec, path):
        algebra = self.get("algebras", spec["algebra"], path + ("algebra",))
        vectors = [self._element(algebra, v, path + ("vectors", i)) for i, v in enumerate(spec["vectors"])]
        return SubalgebraSpec(algebra, vectors, name)

    def _build_backends(self, name, spec, path):
        kind = spec["kind"]
        if kind == "exact":
            chart = self.get("charts", spec["chart"], path + ("chart",))
            gamma = parse_form(spec["gamma"], chart, 3, path + ("gamma",)) if "gamma" in spec else None
            return ExactBackend(chart, gamma)
        if kind == "action":
            chart = self.get("charts", spec["chart"], path + ("chart",))
            algebra = self.get("algebras", spec["algebra"], path + ("algebra",))
            rho = spec.get("rho", {})
            for label in rho:
                if label not in algebra.labels:
                    raise UnresolvedReferenceError(f"undefined label {label!r} of {algebra.name}", path + ("rho", label))
            fields = [
                parse_vector_field(rho[l], chart, path + ("rho", l)) if l in rho else VectorField.zero(chart)
                for l in algebra.labels
            ]
            return ActionBackend(chart, algebra, fields)
        if kind == "point":
            return PointBackend(self.get("algebras", spec["algebra"], path + ("algebra",)))
        if kind == "product":
            return ProductBackend(
                self.get("backends", spec["first"], path + ("first",)),
                self.get("backends", spec["second"], path + ("second",)),
            )
        base = self.get("backends", spec["base"], path + ("base",))
        if kind == "conjugate":
            return conjugate(base)
        return relocate(base, self.get("charts", spec["chart"], path + ("chart",)))

    def _build_bivectors(self, name, spec, path):
        chart = self.get("charts", spec["chart"], path + ("chart",))
        brackets = {}
        for i, entry in enumerate(spec["brackets"]):
            here = path + ("brackets", i)
            for field in ("left", "right"):
                if entry[field] not in chart.coords:
                    raise UnresolvedReferenceError(f"undefined coordinate {entry[field]!r}", here + (field,))
            brackets[(entry["left"], entry["right"])] = parse_scalar(entry["value"], chart, here + ("value",))
        return Bivector.from_brackets(chart, brackets)

    def _build_maps(self, name, spec, path):
        source = self.get("charts", spec["source"], path + ("source",))
        target = self.get("charts", spec["target"], path + ("target",))
        components = [parse_scalar(c, source, path + ("components", i)) for i, c in enumerate(spec["components"])]
        return ChartMap(source, target, components)

    def _build_points(self, name, spec, path):
        chart = self.get("charts", spec["chart"], path + ("chart",))
        return chart, [parse_point(p, chart, path + ("points", i)) for i, p in enumerate(spec["points"])]

    def section(self, backend, value, path) -> Section:
        """A section from coefficients over the frame or a {label: scalar} mapping."""
        chart = backend.chart
        if isinstance(value, dict):
            coeffs = [sympy.S.Zero] * backend.rank
            for label, c in value.items():
                if label not in backend.labels:
                    raise UnresolvedReferenceError(f"undefined frame label {label!r}", path + (label,))
                coeffs[backend.labels.index(label)] = parse_scalar(c, chart, path + (label,))
            return Section(backend, tuple(coeffs))
        if len(value) != backend.rank:
            raise ScenarioError(f"section needs {backend.rank} coefficients, got {len(value)}", path)
        return Section(backend, tuple(parse_scalar(c, chart, path + (i,)) for i, c in enumerate(value)))

    def _build_connections(self, name, spec, path):
        kind = spec["kind"]
        label = spec.get("name", name)
        if kind in ("frame", "poisson", "koszul", "metric", "action_subalgebra"):
            backend = self.get("backends", spec["backend"], path + ("backend",))
        if kind == "frame":
            sections = [self.section(backend, s, path + ("sections", i)) for i, s in enumerate(spec.get("sections", []))]
            frame = SubbundleFrame(backend, sections, name)
            if "A" not in spec:
                return PseudoConnection.zero(frame, label)
            chart = backend.chart
            A = [
                [[parse_scalar(c, chart, path + ("A", i, j, l)) for l, c in enumerate(entry)] for j, entry in enumerate(row)]
                for i, row in enumerate(spec["A"])
            ]
            return PseudoConnection(frame, A, label)
        if kind in ("poisson", "koszul"):
            pi = self.get("bivectors", spec["bivector"], path + ("bivector",))
            if kind == "poisson":
                return PseudoConnection.zero(SubbundleFrame(backend, poisson_graph_frame(backend, pi), f"gr({name})"), label)
            return cotangent_connection(backend, koszul_algebroid(pi))
        if kind == "metric":
            chart = backend.chart
            g = parse_scalar_matrix(spec["g"], chart, path + ("g",))
            omega = two_form_matrix(parse_form(spec.get("omega", []), chart, 2, path + ("omega",)))
            eta = parse_form(spec["eta"], chart, 3, path + ("eta",)) if "eta" in spec else None
            nabla = metric_connection(backend, g, omega, eta)
            nabla.name = label
            return nabla
        if kind == "action_subalgebra":
            return action_subalgebra(backend, self.get("subalgebras", spec["subalgebra"], path + ("subalgebra",)))
        if kind in ("twist", "conjugate", "extracted"):
            base = self.get("connections", spec["connection"], path + ("connection",))
            if kind == "conjugate":
                return conjugate_connection(base)
            if kind == "extracted":
                return extract_connection(build_vb_dirac(base), label)
            return twist(base, parse_form(spec["gamma"], base.chart, 3, path + ("gamma",)))
        if kind in ("backward_image", "forward_image"):
            R = self.get("relations", spec["relation"], path + ("relation",))
            base = self.get("connections", spec["connection"], path + ("connection",))
            if kind == "backward_image":
                return backward_image(R, base)[0]
            return forward_image(R, base, self.get("maps", spec["inverse"], path + ("inverse",)))[0]
        if kind == "transverse":
            return transverse_pair(
                self.get("connections", spec["first"], path + ("first",)),
                self.get("connections", spec["second"], path + ("second",)),
            )
        backend = self.get("backends", spec["backend"], path + ("backend",))
        e = self.get("subalgebras", spec["e"], path + ("e",))
        f = self.get("subalgebras", spec["f"], path + ("f",))
        return action_decomposition(backend, e, f)

    def _build_relations(self, name, spec, path):
        kind = spec["kind"]
        if kind == "graph":
            phi = self.get("maps", spec["map"], path + ("map",))
            gs = parse_form(spec["gamma_source"], phi.source, 3, path + ("gamma_source",)) if "gamma_source" in spec else None
            gt = parse_form(spec["gamma_target"], phi.target, 3, path + ("gamma_target",)) if "gamma_target" in spec else None
            return graph_relation(phi, gs, gt)
        if kind in ("diagonal", "identity"):
            backend = self.get("backends", spec["backend"], path + ("backend",))
            return diagonal_morphism(backend) if kind == "diagonal" else identity_relation(backend)
        if kind == "manin":
            backend = self.get("backends", spec["backend"], path + ("backend",))
            if not isinstance(backend, ActionBackend):
                raise ScenarioError("a Manin pair morphism needs an action backend", path + ("backend",))
            return manin_pair_morphism(backend, self.get("subalgebras", spec["subalgebra"], path + ("subalgebra",)))
        for field in ("source", "target", "support", "frame"):
            if field not in spec:
                raise ScenarioError(f"{field} is required", path)
        source = self.get("backends", spec["source"], path + ("source",))
        target = self.get("backends", spec["target"], path + ("target",))
        support = spec["support"]
        if support["kind"] == "point":
            if target.chart != POINT:
                raise ScenarioError("a point support needs a target over the point", path + ("support",))
            phi = ChartMap(source.chart, POINT, ())
        else:
            if "map" not in support:
                raise ScenarioError("a graph support needs a map", path + ("support",))
            phi = self.get("maps", support["map"], path + ("support", "map"))
        pairs = []
        for i, entry in enumerate(spec["frame"]):
            here = path + ("frame", i)
            t = self._along(target, source.chart, entry["target"], here + ("target",))
            s = self.section(source, entry["source"], here + ("source",))
            pairs.append((t, s.coeffs))
        return CourantRelation(source, target, phi, pairs, name)

    def _along(self, backend, chart: Chart, value, path) -> tuple:
        """Target coefficients, given as functions on the source chart."""
        if isinstance(value, dict):
            coeffs = [sympy.S.Zero] * backend.rank
            for label, c in value.items():
                if label not in backend.labels:
                    raise UnresolvedReferenceError(f"undefined frame label {label!r}", path + (label,))
                coeffs[backend.labels.index(label)] = parse_scalar(c, chart, path + (label,))
            return tuple(coeffs)
        if len(value) != backend.rank:
            raise ScenarioError(f"section needs {backend.rank} coefficients, got {len(value)}", path)
        return tuple(parse_scalar(c, chart, path + (i,)) for i, c in enumerate(value))

    # sampling

    def points(self, chart: Chart, avoid=(), params: Optional[dict] = None, path=()) -> List[tuple]:
        """Named points from ``params["points"]`` or seeded samples avoiding every denominator."""
        params = params or {}
        if "points" in params:
            named_chart, points = self.get("points", params["points"], path + ("points",))
            if named_chart != chart:
                raise ScenarioError(f"points live on {named_chart.name!r}, not {chart.name!r}", path + ("points",))
            return safe_points(chart, points, avoid)
        return sample_points(chart, count=self.samples, seed=self.seed, avoid=avoid)


def koszul_algebroid(pi: Bivector) -> LieAlgebroidData:
    """The cotangent Lie algebroid of π on the coordinate coframe."""
    chart = pi.chart
    n = chart.dim
    d = [KForm.coordinate(chart, i) for i in range(n)]
    structure = {(i, j): koszul_bracket(pi, d[i], d[j]).components for i in range(n) for j in range(n)}
    anchors = tuple(pi.sharp(d[i]) for i in range(n))
    labels = tuple(f"d{c}" for c in chart.coords)
    return LieAlgebroidData(chart, labels, structure, anchors, f"T*{chart.name}")


def load_dict(data: dict, source: str = "<memory>") -> Scenario:
    try:
        jsonschema.validate(instance=data, schema=SCENARIO_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ScenarioError(e.message, tuple(e.absolute_path))
    scenario = Scenario(data, source)
    scenario.check_references()
    scenario.build_all()
    logger.info(f"Loaded scenario {scenario.name!r} from {source}: {len(scenario.checks)} checks")
    return scenario


def load(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e}")
    return load_dict(data, path)


def run(
    scenario: Scenario, samples: Optional[int] = None, seed: Optional[int] = None, checks: Optional[List[dict]] = None
) -> Report:
    """Run the checks in declared order; each check gets a verdict.

    ``checks`` replaces the checks declared in the scenario.
    """
    if samples is not None:
        scenario.samples = samples
    if seed is not None:
        scenario.seed = seed
    report = Report(scenario.name)
    for i, entry in enumerate(scenario.checks if checks is None else checks):
        if entry["kind"] not in CHECKS:
            raise ScenarioError(f"unknown check kind {entry['kind']!r}", ("checks", i, "kind"))
        name, kind = entry["name"], entry["kind"]
        params = entry.get("params", {})
        logger.info(f"Running check {name} ({kind})")
        result = CheckResult(name, kind, ERROR)
        with timed(name) as clock:
            try:
                outcome = CHECKS[kind](scenario, params, ("checks", i, "params"))
                result.verdict = PASS if outcome.passed else FAIL
                result.witnesses = [f.to_dict() for f in outcome.failures]
                details = outcome.to_dict()
                result.details = dict(details["details"], subject=outcome.subject, checked=outcome.checked)
                if not outcome.passed:
                    result.message = f"failed identities: {', '.join(outcome.failed_identities())}"
            except NonCleanCompositionError as e:
                result.message = str(e)
                result.details = {"dimensions": e.dimensions}
                logger.error(f"Check {name} raised: {e}")
            except CourantVerifyError as e:
                result.message = f"{type(e).__name__}: {e}"
                logger.error(f"Check {name} raised: {result.message}")
            except Exception as e:
                result.message = f"{type(e).__name__}: {e}"
                logger.exception(f"Check {name} raised an unexpected error")
        result.elapsed = clock["seconds"]
        logger.info(f"Check {name}: {result.verdict} in {result.elapsed:.2f}s")
        report.checks.append(result)
    return report


# checks


def _need(params: dict, key: str, path):
    if key not in params:
        raise ScenarioError(f"missing parameter {key!r}", path)
    return params[key]


def _get(scenario: Scenario, params: dict, key: str, path):
    return scenario.get(PARAM_REFERENCES[key], _need(params, key, path), path + (key,))


def _frame_avoid(nabla: PseudoConnection) -> list:
    return nabla.frame.coefficients()


def _connection_points(scenario: Scenario, nabla: PseudoConnection, params, path):
    return scenario.points(nabla.chart, _frame_avoid(nabla), params, path)


@check("quadlie")
def _check_quadlie(scenario, params, path):
    return verify_quadlie(_get(scenario, params, "algebra", path))


@check("subalgebra")
def _check_subalgebra(scenario, params, path):
    s = _get(scenario, params, "subalgebra", path)
    report = VerificationReport(f"subalgebra {s.name}")
    report.record("closed", check_subalgebra(s), basis=[s.algebra.render(v) for v in s.basis])
    if params.get("lagrangian"):
        report.record("lagrangian", is_lagrangian_subalgebra(s), dim=s.dim, ambient=s.algebra.dim)
    return report


@check("matched_pair")
def _check_matched_pair(scenario, params, path):
    e, f = _get(scenario, params, "e", path), _get(scenario, params, "f", path)
    report = VerificationReport(f"matched pair ({e.name}, {f.name})")
    report.record("matched_pair", check_matched_pair(e, f), e=e.dim, f=f.dim)
    return report


@check("axioms")
def _check_axioms(scenario, params, path):
    return verify_axioms(_get(scenario, params, "backend", path))


@check("bracket_formulas")
def _check_bracket_formulas(scenario, params, path):
    return compare_brackets(_get(scenario, params, "backend", path))


@check("coisotropic_stabilizers")
def _check_stabilizers(scenario, params, path):
    backend = _get(scenario, params, "backend", path)
    return coisotropic_stabilizers(backend, scenario.points(backend.chart, backend.coefficients(), params, path))


@check("metric_compatibility")
def _check_metric(scenario, params, path):
    return check_metric_compatibility(_get(scenario, params, "connection", path))


@check("pseudo_dirac")
def _check_pseudo_dirac(scenario, params, path):
    nabla = _get(scenario, params, "connection", path)
    return is_pseudo_dirac(nabla, _connection_points(scenario, nabla, params, path))


@check("tensoriality")
def _check_tensoriality(scenario, params, path):
    return check_tensoriality(_get(scenario, params, "connection", path))


@check("lie_algebroid")
def _check_lie_algebroid(scenario, params, path):
    nabla = _get(scenario, params, "connection", path)
    data = induced_lie_algebroid(nabla)
    report = check_lie_algebroid(data)
    report.details["algebroid"] = data.to_dict()
    return report


@check("curvature_form")
def _check_curvature(scenario, params, path):
    return check_curvature_form(_get(scenario, params, "connection", path))


@check("jacobi_defect")
def _check_jacobi_defect(scenario, params, path):
    nabla = _get(scenario, params, "connection", path)
    k = nabla.frame.k
    unit = nabla.frame.unit
    triples = [(unit(i), unit(j), unit(l)) for i in range(k) for j in range(i + 1, k) for l in range(j + 1, k)]
    return check_jacobi_defect(nabla, triples)


@check("poisson_oracle")
def _check_poisson_oracle(scenario, params, path):
    """On gr(π♯) with ∇ = 0, T(σ_i,σ_j,σ_l) = −Jac(x_i,x_j,x_l) and the defect is −a*Ψ."""
    nabla = _get(scenario, params, "connection", path)
    pi = _get(scenario, params, "bivector", path)
    chart = pi.chart
    nabla.chart.require(chart)
    T = torsion(nabla)
    x = chart.symbols
    report = VerificationReport(f"Jacobiator oracle for {nabla.name}")
    n = chart.dim
    jacobiators = {}
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                jac = poisson_jacobiator(pi, x[i], x[j], x[l])
                if jac != 0:
                    jacobiators[f"{chart.coords[i]},{chart.coords[j]},{chart.coords[l]}"] = render(jac)
                residual = scalar(T[i][j][l] + jac)
                report.record("torsion_is_minus_jacobiator", residual == 0, triple=[i, j, l], residual=render(residual))
    report.details["jacobiator"] = jacobiators
    report.details["poisson"] = not jacobiators
    unit = nabla.frame.unit
    triples = [(unit(i), unit(j), unit(l)) for i in range(n) for j in range(i + 1, n) for l in range(j + 1, n)]
    return report.merge(check_jacobi_defect(nabla, triples))


@check("torsion_form")
def _check_torsion_form(scenario, params, path):
    """T(σ_i,σ_j,σ_l) = scale · η(a σ_i, a σ_j, a σ_l)."""
    nabla = _get(scenario, params, "connection", path)
    chart = nabla.chart
    eta = parse_form(_need(params, "form", path), chart, 3, path + ("form",))
    scale = parse_rational(params.get("scale", 1), path + ("scale",))
    anchors = [nabla.backend.anchor(s) for s in nabla.frame.sections]
    T = torsion(nabla)
    k = nabla.frame.k
    report = VerificationReport(f"torsion of {nabla.name} against {eta.render()}")
    for i in range(k):
        for j in range(k):
            for l in range(k):
                value = interior(anchors[l], interior(anchors[j], interior(anchors[i], eta))).as_scalar()
                residual = scalar(T[i][j][l] - scale * value)
                report.record("torsion_form", residual == 0, triple=[i, j, l], residual=render(residual))
    return report


@check("flat_sections")
def _check_flat_sections(scenario, params, path):
    nabla = _get(scenario, params, "connection", path)
    chart = nabla.chart
    sigma = [parse_scalar(c, chart, path + ("sigma", i)) for i, c in enumerate(_need(params, "sigma", path))]
    tau = [parse_scalar(c, chart, path + ("tau", i)) for i, c in enumerate(_need(params, "tau", path))]
    return flat_sections_check(nabla, sigma, tau)


@check("lift_calculus")
def _check_lift_calculus(scenario, params, path):
    return verify_lift_calculus(TangentProlongation(_get(scenario, params, "backend", path)))


@check("linear_bracket")
def _check_linear_bracket(scenario, params, path):
    backend = _get(scenario, params, "backend", path)
    prolongation = TangentProlongation(backend)
    sigma = scenario.section(backend, _need(params, "sigma", path), path + ("sigma",))
    tau = scenario.section(backend, _need(params, "tau", path), path + ("tau",))
    primes = {}
    for key in ("sigma_prime", "tau_prime"):
        value = _need(params, key, path)
        if len(value) != backend.chart.dim:
            raise ScenarioError(f"{key} needs one section per coordinate", path + (key,))
        primes[key] = [scenario.section(backend, s, path + (key, i)) for i, s in enumerate(value)]
    return check_linear_bracket(prolongation, sigma, primes["sigma_prime"], tau, primes["tau_prime"])


def _tangent_points(scenario: Scenario, nabla: PseudoConnection, params, path):
    chart = TangentProlongation(nabla.backend).chart
    if "points" in params:
        raise ScenarioError("named points are not supported on the tangent chart", path + ("points",))
    return scenario.points(chart, _frame_avoid(nabla), None, path)


@check("vb_dirac")
def _check_vb_dirac(scenario, params, path):
    nabla = _get(scenario, params, "connection", path)
    L = build_vb_dirac(nabla)
    points = _tangent_points(scenario, nabla, params, path)
    report = VerificationReport(f"VB-Dirac structure of ({nabla.frame.name}, {nabla.name})")
    report.merge(check_vb_lagrangian(L, points), "lagrangian.")
    report.merge(check_involutive(L, points), "involutive.")
    report.details["frame"] = L.to_dict()
    return report


@check("correspondence")
def _check_correspondence(scenario, params, path):
    nabla = _get(scenario, params, "connection", path)
    return check_correspondence(nabla, _tangent_points(scenario, nabla, params, path))


def _relation_points(scenario: Scenario, R: CourantRelation, extra, params, path):
    return scenario.points(R.chart, list(R.coefficients()) + list(extra), params, path)


@check("relation_lagrangian")
def _check_relation_lagrangian(scenario, params, path):
    R = _get(scenario, params, "relation", path)
    return check_relation_lagrangian(R, _relation_points(scenario, R, (), params, path))


@check("relation_involutive")
def _check_relation_involutive(scenario, params, path):
    return check_involutive_along_support(_get(scenario, params, "relation", path))


def _image_report(scenario, R, nabla, target, params, path, subject):
    """Pseudo-Dirac test, composition identity and fiberwise shadow of a composition."""
    rows = [c for row in nabla.frame.rows for c in row]
    points = _relation_points(scenario, R, rows, params, path)
    report = VerificationReport(subject)
    report.merge(is_pseudo_dirac(nabla, points), "image.")
    report.merge(composition_identity(R, nabla, target, points), "composition.")
    report.merge(check_fiber_composition(R, nabla, target, points), "fibers.")
    if "expect" in params:
        expected = _get(scenario, params, "expect", path)
        report.record("expected", same_structure(nabla, expected), image=nabla.render(), expected=expected.render())
    report.details["frame"] = [s.render() for s in nabla.frame.sections]
    report.details["connection"] = nabla.render()
    return report


@check("backward_image")
def _check_backward_image(scenario, params, path):
    R = _get(scenario, params, "relation", path)
    target = _get(scenario, params, "connection", path)
    nabla, _ = backward_image(R, target)
    return _image_report(scenario, R, nabla, target, params, path, f"backward image of {target.name} through {R.name}")


@check("forward_image")
def _check_forward_image(scenario, params, path):
    R = _get(scenario, params, "relation", path)
    source = _get(scenario, params, "connection", path)
    inverse = _get(scenario, params, "inverse", path)
    image, _ = forward_image(R, source, inverse)
    transposed = R.transpose(inverse)
    report = _image_report(
        scenario, transposed, image, source, params, path, f"forward image of {source.name} through {R.name}"
    )
    back, _ = backward_image(R, image)
    report.record("round_trip", same_structure(back, source), returned=back.render(), original=source.render())
    return report


@check("pullback_formula")
def _check_pullback_formula(scenario, params, path):
    R = _get(scenario, params, "relation", path)
    return pullback_formula(R, _get(scenario, params, "connection", path), _get(scenario, params, "target", path))


@check("morphism")
def _check_morphism(scenario, params, path):
    R = _get(scenario, params, "relation", path)
    nabla = _get(scenario, params, "connection", path)
    target = _get(scenario, params, "target", path)
    psi = psi_map(R, nabla.frame, target.frame)
    report = morphism_check(psi, nabla, target)
    report.details["psi"] = psi.render()
    return report


@check("transverse_pair")
def _check_transverse_pair(scenario, params, path):
    first = _get(scenario, params, "first", path)
    second = _get(scenario, params, "second", path)
    points = scenario.points(first.chart, _frame_avoid(first) + _frame_avoid(second), params, path)
    report = check_transverse_pair(first, second, points)
    W = transverse_pair(first, second, points)
    report.merge(is_pseudo_dirac(W, points), "image.")
    if "expect" in params:
        expected = _get(scenario, params, "expect", path)
        report.record("expected", same_structure(W, expected), image=W.render(), expected=expected.render())
    report.details["frame"] = [s.render() for s in W.frame.sections]
    report.details["connection"] = W.render()
    return report


@check("action_decomposition")
def _check_action_decomposition(scenario, params, path):
    backend = _get(scenario, params, "backend", path)
    e, f = _get(scenario, params, "e", path), _get(scenario, params, "f", path)
    points = scenario.points(backend.chart, backend.coefficients(), params, path)
    W = action_decomposition(backend, e, f, points)
    closed = action_decomposition_formula(backend, e, f, points)
    report = VerificationReport(f"decomposition {backend.algebra.name} = {e.name} + {f.name}")
    report.record("formula_agrees", same_structure(W, closed), generic=W.render(), formula=closed.render())
    report.merge(is_pseudo_dirac(W, points), "image.")
    if params.get("flat"):
        report.record("flat", W.flat_frame, connection=W.render())
    if "bivector" in params:
        pi = _get(scenario, params, "bivector", path)
        graph = SubbundleFrame(W.backend, poisson_graph_frame(W.backend, pi), "gr(pi)")
        missing = [s for s in graph.sections if W.frame.solve(s) is None]
        report.record("poisson_graph", not missing, missing=missing)
    report.details["frame"] = [s.render() for s in W.frame.sections]
    report.details["connection"] = W.render()
    return report


@check("bundle_of_lie_algebras")
def _check_bundle(scenario, params, path):
    """Decomposition with e = 0: anchors vanish and Ψ is a fiberwise morphism into e × f̄."""
    backend = _get(scenario, params, "backend", path)
    e, f = _get(scenario, params, "e", path), _get(scenario, params, "f", path)
    if e.dim:
        raise ScenarioError("the bundle-of-Lie-algebras case needs e = 0", path + ("e",))
    points = scenario.points(backend.chart, backend.coefficients(), params, path)
    first, second = action_subalgebra(backend, e), action_subalgebra(backend, f)
    target = transverse_target(first, second)
    W, psi = backward_image(diagonal_morphism(backend), target, points)
    report = VerificationReport(f"bundle of Lie algebras from {f.name}")
    report.merge(is_pseudo_dirac(W, points), "image.")
    report.merge(fiberwise_lie_morphism(psi, W, target), "psi.")
    data = induced_lie_algebroid(W)
    report.merge(check_lie_algebroid(data), "algebroid.")
    report.details["algebroid"] = data.to_dict()
    report.details["psi"] = psi.render()
    return report


@check("q_poisson")
def _check_q_poisson(scenario, params, path):
    backend = _get(scenario, params, "backend", path)
    g, h = _get(scenario, params, "g", path), _get(scenario, params, "h", path)
    points = scenario.points(backend.chart, backend.coefficients(), params, path)
    nabla, psi, R, target = q_poisson(backend, g, h, points)
    report = VerificationReport(f"q-Poisson structure from ({g.name}, {h.name})")
    report.merge(check_relation_lagrangian(R, points), "relation.")
    report.merge(check_involutive_along_support(R), "relation.")
    report.merge(is_pseudo_dirac(nabla, points), "image.")
    report.merge(morphism_check(psi, nabla, target), "psi.")
    report.details["frame"] = [s.render() for s in nabla.frame.sections]
    report.details["connection"] = nabla.render()
    report.details["psi"] = psi.render()
    return report


@check("ann_lemma")
def _check_ann_lemma(scenario, params, path):
    count = params.get("count", 100)
    max_dim = params.get("max_dim", 6)
    return check_ann_lemma(count, max_dim, scenario.seed)
