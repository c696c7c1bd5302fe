"""The shipped example library.

Each example is a scenario document in the same JSON shape a user would
write by hand; ``run_example`` loads it through ``scenario.load_dict`` so
the library exercises the schema as well as the checks.
"""

import copy
import logging
from typing import Dict, List, Optional

from .errors import ScenarioError
from .report import Report
from .scenario import SCENARIO_VERSION, load_dict, run

logger = logging.getLogger(__name__)


def _form(*terms):
    return [{"indices": list(indices), "scalar": value} for indices, value in terms]


def _bracket(left, right, value):
    return {"left": left, "right": right, "value": value}


def _check(name, kind, **params):
    return {"name": name, "kind": kind, "params": params}


R3 = {"R3": ["x", "y", "z"]}

# g = span{a, b} acting on (p, q) together with its dual; the stabilizers are Lagrangian
_SEMIDIRECT = {
    "charts": {"P": ["p", "q"]},
    "algebras": {
        "d": {"kind": "semidirect_dual", "labels": ["a", "b"], "brackets": [_bracket("a", "b", {"b": 1})]},
    },
    "backends": {
        "act": {
            "kind": "action",
            "chart": "P",
            "algebra": "d",
            "rho": {"a": {"q": "q"}, "b": {"p": "-q"}, "a*": {"p": 1}, "b*": {"q": 1}},
        },
    },
}


def _with_semidirect(document: dict) -> dict:
    merged = copy.deepcopy(_SEMIDIRECT)
    for key, value in document.items():
        if isinstance(value, dict) and key in merged:
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


EXAMPLES: Dict[str, dict] = {
    "sl2-axioms": {
        "description": "Courant axioms of sl2 over a point and of its projective action on the line",
        "charts": {"R": ["x"]},
        "algebras": {"sl2": {"kind": "sl2"}},
        "backends": {
            "point": {"kind": "point", "algebra": "sl2"},
            "line": {
                "kind": "action",
                "chart": "R",
                "algebra": "sl2",
                "rho": {"e": ["-1"], "h": ["-2*x"], "f": ["x**2"]},
            },
        },
        "checks": [
            _check("quadratic", "quadlie", algebra="sl2"),
            _check("point-axioms", "axioms", backend="point"),
            _check("action-axioms", "axioms", backend="line"),
            _check("action-brackets", "bracket_formulas", backend="line"),
            _check("stabilizers", "coisotropic_stabilizers", backend="line"),
            _check("lift-calculus", "lift_calculus", backend="point"),
        ],
    },
    "heisenberg-poisson": {
        "description": "The graph of the linear Poisson structure {x,y} = z is a Dirac structure",
        "charts": R3,
        "backends": {"T": {"kind": "exact", "chart": "R3"}},
        "bivectors": {"pi": {"chart": "R3", "brackets": [_bracket("x", "y", "z")]}},
        "connections": {
            "graph": {"kind": "poisson", "backend": "T", "bivector": "pi"},
            "koszul": {"kind": "koszul", "backend": "T", "bivector": "pi"},
        },
        "checks": [
            _check("axioms", "axioms", backend="T"),
            _check("metric", "metric_compatibility", connection="graph"),
            _check("dirac", "pseudo_dirac", connection="graph"),
            _check("jacobiator", "poisson_oracle", connection="graph", bivector="pi"),
            _check("tensoriality", "tensoriality", connection="graph"),
            _check("koszul-algebroid", "lie_algebroid", connection="koszul"),
            _check("koszul-flat", "pseudo_dirac", connection="koszul"),
        ],
    },
    "nonpoisson-bivector": {
        "description": "pi = dx^dy + x dx^dz is not Poisson: the Jacobi defect is -a*Psi",
        "charts": R3,
        "backends": {"T": {"kind": "exact", "chart": "R3"}},
        "bivectors": {"pi": {"chart": "R3", "brackets": [_bracket("x", "y", 1), _bracket("x", "z", "x")]}},
        "connections": {"graph": {"kind": "poisson", "backend": "T", "bivector": "pi"}},
        "checks": [
            _check("jacobiator", "poisson_oracle", connection="graph", bivector="pi"),
            _check("tensoriality", "tensoriality", connection="graph"),
            _check("correspondence", "correspondence", connection="graph"),
            _check("dirac", "pseudo_dirac", connection="graph"),
            _check("vb-dirac", "vb_dirac", connection="graph"),
        ],
    },
    "metcon-r3": {
        "description": "gr(omega + g) on R3 with the metric connection of torsion d(omega)",
        "charts": R3,
        "backends": {"T": {"kind": "exact", "chart": "R3"}},
        "connections": {
            "metric": {
                "kind": "metric",
                "backend": "T",
                "g": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
                "omega": _form((("x", "y"), "z")),
                "eta": _form((("x", "y", "z"), 1)),
            },
        },
        "checks": [
            _check("metric", "metric_compatibility", connection="metric"),
            _check("pseudo-dirac", "pseudo_dirac", connection="metric"),
            _check("torsion", "torsion_form", connection="metric", form=_form((("x", "y", "z"), 1)), scale=2),
            _check("tensoriality", "tensoriality", connection="metric"),
            _check("curvature", "curvature_form", connection="metric"),
            _check("algebroid", "lie_algebroid", connection="metric"),
            _check("vb-dirac", "vb_dirac", connection="metric"),
        ],
    },
    "metcon-r3-mismatch": {
        "description": "The same frame with the torsion-free connection: Psi does not vanish",
        "charts": R3,
        "backends": {"T": {"kind": "exact", "chart": "R3"}},
        "connections": {
            "metric": {
                "kind": "metric",
                "backend": "T",
                "g": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
                "omega": _form((("x", "y"), "z")),
            },
        },
        "checks": [
            _check("metric", "metric_compatibility", connection="metric"),
            _check("tensoriality", "tensoriality", connection="metric"),
            _check("curvature", "curvature_form", connection="metric"),
            _check("pseudo-dirac", "pseudo_dirac", connection="metric"),
        ],
    },
    "manin-triple-2d": _with_semidirect(
        {
            "description": "The Manin triple (g, g*) acting on the plane decomposes into gr(q dp^dq) with zero connection",
            "subalgebras": {
                "e": {"algebra": "d", "vectors": [{"a": 1}, {"b": 1}]},
                "f": {"algebra": "d", "vectors": [{"a*": 1}, {"b*": 1}]},
            },
            "bivectors": {"pi": {"chart": "P", "brackets": [_bracket("p", "q", "q")]}},
            "connections": {"W": {"kind": "action_decomposition", "backend": "act", "e": "e", "f": "f"}},
            "relations": {"manin": {"kind": "manin", "backend": "act", "subalgebra": "e"}},
            "checks": [
                _check("quadratic", "quadlie", algebra="d"),
                _check("axioms", "axioms", backend="act"),
                _check("stabilizers", "coisotropic_stabilizers", backend="act"),
                _check("e-lagrangian", "subalgebra", subalgebra="e", lagrangian=True),
                _check("f-lagrangian", "subalgebra", subalgebra="f", lagrangian=True),
                _check("matched-pair", "matched_pair", e="e", f="f"),
                _check("decomposition", "action_decomposition", backend="act", e="e", f="f", flat=True, bivector="pi"),
                _check("algebroid", "lie_algebroid", connection="W"),
                _check("manin-lagrangian", "relation_lagrangian", relation="manin"),
                _check("manin-involutive", "relation_involutive", relation="manin"),
            ],
        }
    ),
    "matched-pair-generic": _with_semidirect(
        {
            "description": "A matched pair that is not a Manin triple, and the q-Poisson structure of (g, h)",
            "subalgebras": {
                "e": {"algebra": "d", "vectors": [{"a": 1}, {"a*": 1}]},
                "f": {"algebra": "d", "vectors": [{"b": 1, "a*": -1}, {"b*": 1, "a": 1, "a*": 1}]},
                "g": {"algebra": "d", "vectors": [{"a": 1}, {"b": 1}]},
            },
            "connections": {
                "E": {"kind": "action_subalgebra", "backend": "act", "subalgebra": "e"},
                "F": {"kind": "action_subalgebra", "backend": "act", "subalgebra": "f"},
                "W": {"kind": "action_decomposition", "backend": "act", "e": "e", "f": "f"},
            },
            "checks": [
                _check("e-subalgebra", "subalgebra", subalgebra="e"),
                _check("f-subalgebra", "subalgebra", subalgebra="f"),
                _check("matched-pair", "matched_pair", e="e", f="f"),
                _check("decomposition", "action_decomposition", backend="act", e="e", f="f"),
                _check("transverse", "transverse_pair", first="E", second="F"),
                _check("tensoriality", "tensoriality", connection="W"),
                _check("algebroid", "lie_algebroid", connection="W"),
                _check("q-poisson", "q_poisson", backend="act", g="g", h="f"),
            ],
        }
    ),
    "bundle-of-liealgebras": _with_semidirect(
        {
            "description": "The decomposition with e = 0: a bundle of Lie algebras on T*M",
            "subalgebras": {
                "zero": {"algebra": "d", "vectors": []},
                "all": {"algebra": "d", "vectors": [{"a": 1}, {"b": 1}, {"a*": 1}, {"b*": 1}]},
            },
            "checks": [
                _check("matched-pair", "matched_pair", e="zero", f="all"),
                _check("bundle", "bundle_of_lie_algebras", backend="act", e="zero", f="all"),
            ],
        }
    ),
    "transverse-tm-tstarm": {
        "description": "TM and the graph of x d/dx^d/dy are transverse; they produce the graph of the opposite bivector",
        "charts": {"M": ["x", "y"]},
        "backends": {"T": {"kind": "exact", "chart": "M"}},
        "bivectors": {
            "pi": {"chart": "M", "brackets": [_bracket("x", "y", "x")]},
            "minus_pi": {"chart": "M", "brackets": [_bracket("x", "y", "-x")]},
        },
        "connections": {
            "tangent": {"kind": "frame", "backend": "T", "sections": [{"d/dx": 1}, {"d/dy": 1}]},
            "graph": {"kind": "poisson", "backend": "T", "bivector": "pi"},
            "expected": {"kind": "poisson", "backend": "T", "bivector": "minus_pi"},
            "W": {"kind": "transverse", "first": "tangent", "second": "graph"},
        },
        "relations": {"diagonal": {"kind": "diagonal", "backend": "T"}},
        "checks": [
            _check("tangent-dirac", "pseudo_dirac", connection="tangent"),
            _check("graph-dirac", "pseudo_dirac", connection="graph"),
            _check("transverse", "transverse_pair", first="tangent", second="graph", expect="expected"),
            _check("diagonal-lagrangian", "relation_lagrangian", relation="diagonal"),
            _check("correspondence", "correspondence", connection="W"),
        ],
    },
    "correspondence-roundtrip": {
        "description": "Backward and forward images along a polynomial diffeomorphism, and the VB-Dirac round trip",
        "charts": {"M": ["x", "y"], "N": ["u", "v"]},
        "backends": {"TM": {"kind": "exact", "chart": "M"}, "TN": {"kind": "exact", "chart": "N"}},
        "bivectors": {
            "piM": {"chart": "M", "brackets": [_bracket("x", "y", "y")]},
            "piN": {"chart": "N", "brackets": [_bracket("u", "v", "u")]},
        },
        "maps": {
            "phi": {"source": "M", "target": "N", "components": ["x", "y + x**2"]},
            "phi_inverse": {"source": "N", "target": "M", "components": ["u", "v - u**2"]},
        },
        "connections": {
            "source": {"kind": "poisson", "backend": "TM", "bivector": "piM"},
            "target": {"kind": "poisson", "backend": "TN", "bivector": "piN"},
            "pulled": {"kind": "backward_image", "relation": "graph", "connection": "target"},
            "extracted": {"kind": "extracted", "connection": "source"},
        },
        "relations": {"graph": {"kind": "graph", "map": "phi"}},
        "checks": [
            _check("relation-lagrangian", "relation_lagrangian", relation="graph"),
            _check("relation-involutive", "relation_involutive", relation="graph"),
            _check("backward", "backward_image", relation="graph", connection="target"),
            _check("forward", "forward_image", relation="graph", connection="source", inverse="phi_inverse"),
            _check("pullback", "pullback_formula", relation="graph", connection="pulled", target="target"),
            _check("morphism", "morphism", relation="graph", connection="pulled", target="target"),
            _check("source-correspondence", "correspondence", connection="source"),
            _check("pulled-correspondence", "correspondence", connection="pulled"),
            _check("extracted", "metric_compatibility", connection="extracted"),
        ],
    },
    "ann-lemma-fuzz": {
        "description": "ann(R2 o R1) = ann(R2) o ann(R1) over seeded random linear relations",
        "settings": {"seed": 0},
        "checks": [_check("ann-lemma", "ann_lemma", count=100, max_dim=6)],
    },
}

# checks that are meant to fail; every other check of the library passes
EXPECTED_FAILURES: Dict[str, List[str]] = {
    "nonpoisson-bivector": ["dirac", "vb-dirac"],
    "metcon-r3-mismatch": ["pseudo-dirac"],
}


def list_examples() -> List[str]:
    return sorted(EXAMPLES)


def describe(name: str) -> str:
    return example_document(name)["description"]


def example_document(name: str) -> dict:
    """A fresh copy of the scenario document of a named example."""
    if name not in EXAMPLES:
        raise ScenarioError(f"unknown example {name!r}; known examples: {', '.join(list_examples())}")
    document = copy.deepcopy(EXAMPLES[name])
    document["version"] = SCENARIO_VERSION
    document["name"] = name
    return document


def run_example(name: str, samples: Optional[int] = None, seed: Optional[int] = None) -> Report:
    logger.info(f"Running example {name}")
    scenario = load_dict(example_document(name), f"example:{name}")
    return run(scenario, samples, seed)
