"""Tests for scenario loading, the check runner and the example library."""

import copy
import unittest

import jsonschema

from courant_verify.errors import PoleError, ScenarioError, UnresolvedReferenceError
from courant_verify.exactcalc import Chart, Rational
from courant_verify.library import EXPECTED_FAILURES, describe, example_document, list_examples, run_example
from courant_verify.report import ERROR, FAIL, PASS, REPORT_SCHEMA
from courant_verify.scenario import load_dict, run
from courant_verify.utils import DEFAULT_SAMPLES, safe_points, sample_points

HEISENBERG = {
    "version": 1,
    "name": "heisenberg",
    "charts": {"R3": ["x", "y", "z"]},
    "backends": {"T": {"kind": "exact", "chart": "R3"}},
    "bivectors": {"pi": {"chart": "R3", "brackets": [{"left": "x", "right": "y", "value": "z"}]}},
    "points": {"some": {"chart": "R3", "points": [[0, 0, 0], [1, "1/2", -2]]}},
    "connections": {"graph": {"kind": "poisson", "backend": "T", "bivector": "pi"}},
    "checks": [
        {"name": "dirac", "kind": "pseudo_dirac", "params": {"connection": "graph"}},
        {"name": "named-points", "kind": "pseudo_dirac", "params": {"connection": "graph", "points": "some"}},
        {"name": "oracle", "kind": "poisson_oracle", "params": {"connection": "graph", "bivector": "pi"}},
    ],
}


def document(**changes):
    data = copy.deepcopy(HEISENBERG)
    data.update(changes)
    return data


def without_timing(report):
    described = report.to_dict()
    for entry in described["checks"]:
        entry.pop("timing")
    return described


class TestLoading(unittest.TestCase):
    """Test cases for schema validation and reference resolution."""

    def test_load(self):
        scenario = load_dict(document())
        self.assertEqual(scenario.name, "heisenberg")
        self.assertEqual(len(scenario.checks), 3)

    def test_schema_error_carries_the_path(self):
        with self.assertRaises(ScenarioError) as ctx:
            load_dict(document(charts={"R3": ["x", "x"]}))
        self.assertEqual(ctx.exception.path, ("charts", "R3"))

    def test_unknown_field(self):
        with self.assertRaises(ScenarioError) as ctx:
            load_dict(document(extra=1))
        self.assertIn("extra", str(ctx.exception))

    def test_wrong_version(self):
        with self.assertRaises(ScenarioError):
            load_dict(document(version=2))

    def test_float_is_rejected_by_the_schema(self):
        with self.assertRaises(ScenarioError):
            load_dict(document(points={"some": {"chart": "R3", "points": [[0.5, 0, 0]]}}))

    def test_decimal_string_is_rejected(self):
        with self.assertRaises(ScenarioError) as ctx:
            load_dict(document(points={"some": {"chart": "R3", "points": [[0, "0.5", 0]]}}))
        self.assertEqual(ctx.exception.path, ("points", "some", "points", 0, 1))

    def test_unresolved_chart(self):
        with self.assertRaises(UnresolvedReferenceError) as ctx:
            load_dict(document(backends={"T": {"kind": "exact", "chart": "Q"}}))
        self.assertEqual(ctx.exception.path, ("backends", "T", "chart"))

    def test_unresolved_frame_label(self):
        connections = {"c": {"kind": "frame", "backend": "T", "sections": [{"d/dw": 1}]}}
        with self.assertRaises(UnresolvedReferenceError) as ctx:
            load_dict(document(connections=connections, checks=[{"name": "c", "kind": "tensoriality", "params": {"connection": "c"}}]))
        self.assertEqual(ctx.exception.path, ("connections", "c", "sections", 0, "d/dw"))

    def test_unresolved_check_parameter(self):
        checks = [{"name": "dirac", "kind": "pseudo_dirac", "params": {"connection": "missing"}}]
        with self.assertRaises(UnresolvedReferenceError) as ctx:
            load_dict(document(checks=checks))
        self.assertEqual(ctx.exception.path, ("checks", 0, "params", "connection"))

    def test_unknown_check_kind(self):
        with self.assertRaises(ScenarioError) as ctx:
            load_dict(document(checks=[{"name": "x", "kind": "no_such_check"}]))
        self.assertEqual(ctx.exception.path, ("checks", 0, "kind"))

    def test_self_reference(self):
        connections = {"c": {"kind": "twist", "connection": "c", "gamma": []}}
        with self.assertRaises(ScenarioError):
            load_dict(document(connections=connections, checks=[{"name": "c", "kind": "tensoriality", "params": {"connection": "c"}}]))


class TestRunner(unittest.TestCase):
    """Test cases for running checks and reporting verdicts."""

    def test_passing_run(self):
        report = run(load_dict(document()), samples=2)
        self.assertEqual([c.verdict for c in report.checks], [PASS, PASS, PASS])
        self.assertEqual(report.exit_code, 0)
        self.assertEqual(report.summary, {PASS: 3, FAIL: 0, ERROR: 0})
        jsonschema.validate(instance=report.to_dict(), schema=REPORT_SCHEMA)

    def test_failing_run_has_witnesses(self):
        brackets = [{"left": "x", "right": "y", "value": "y"}, {"left": "y", "right": "z", "value": "x"}]
        report = run(load_dict(document(bivectors={"pi": {"chart": "R3", "brackets": brackets}})), samples=2)
        dirac = report.checks[0]
        self.assertEqual(dirac.verdict, FAIL)
        self.assertTrue(dirac.witnesses)
        self.assertIn("psi", dirac.message)
        self.assertEqual(report.checks[2].verdict, PASS)
        self.assertEqual(report.exit_code, 1)
        jsonschema.validate(instance=report.to_dict(), schema=REPORT_SCHEMA)

    def test_error_verdict(self):
        scenario = load_dict(document(checks=[{"name": "broken", "kind": "pseudo_dirac", "params": {}}]))
        report = run(scenario)
        self.assertEqual(report.checks[0].verdict, ERROR)
        self.assertIn("missing parameter", report.checks[0].message)
        self.assertEqual(report.exit_code, 1)

    def test_replacement_checks(self):
        scenario = load_dict(document())
        report = run(scenario, checks=[{"name": "tensor", "kind": "tensoriality", "params": {"connection": "graph"}}])
        self.assertEqual([c.name for c in report.checks], ["tensor"])
        with self.assertRaises(ScenarioError):
            run(scenario, checks=[{"name": "x", "kind": "no_such_check"}])

    def test_settings_and_overrides(self):
        scenario = load_dict(document(settings={"samples": 4, "seed": 7}))
        self.assertEqual((scenario.samples, scenario.seed), (4, 7))
        run(scenario, samples=2, seed=1)
        self.assertEqual((scenario.samples, scenario.seed), (2, 1))

    def test_deterministic(self):
        first = run(load_dict(document()), samples=3, seed=5)
        second = run(load_dict(document()), samples=3, seed=5)
        self.assertEqual(without_timing(first), without_timing(second))

    def test_rank_drop_at_named_points(self):
        data = {
            "version": 1,
            "name": "axis",
            "charts": {"P": ["p", "q"]},
            "backends": {"T": {"kind": "exact", "chart": "P"}},
            "points": {"axis": {"chart": "P", "points": [[0, 1], [0, 2]]}},
            "connections": {"w": {"kind": "frame", "backend": "T", "sections": [{"d/dp": "p"}, {"d/dq": 1}]}},
            "checks": [{"name": "dirac", "kind": "pseudo_dirac", "params": {"connection": "w", "points": "axis"}}],
        }
        check = run(load_dict(data)).checks[0]
        self.assertEqual(check.verdict, FAIL)
        self.assertIn("rank", check.message)
        self.assertEqual([w["witness"]["rank"] for w in check.witnesses], [1, 1])


class TestSampling(unittest.TestCase):
    """Test cases for seeded rational sample points."""

    def setUp(self):
        self.chart = Chart("M", ("x", "y"))
        self.x, self.y = self.chart.symbols

    def test_seeded(self):
        self.assertEqual(sample_points(self.chart, 4, seed=3), sample_points(self.chart, 4, seed=3))
        self.assertEqual(len(set(sample_points(self.chart, 6))), 6)

    def test_avoids_poles(self):
        for point in sample_points(self.chart, 8, avoid=[1 / self.x]):
            self.assertNotEqual(point[0], 0)

    def test_point_manifold(self):
        self.assertEqual(sample_points(Chart("pt", ()), 3), [()])

    def test_named_point_on_a_pole(self):
        self.assertEqual(safe_points(self.chart, [(1, 2)], [1 / self.x]), [(Rational(1), Rational(2))])
        with self.assertRaises(PoleError):
            safe_points(self.chart, [(0, 2)], [1 / self.x])

    def test_action_anchor_poles(self):
        brackets = [{"left": "a", "right": "b", "value": {"b": 1}}]
        data = {
            "version": 1,
            "name": "poles",
            "charts": {"P": ["p", "q"]},
            "algebras": {"d": {"kind": "semidirect_dual", "labels": ["a", "b"], "brackets": brackets}},
            "backends": {
                "act": {
                    "kind": "action",
                    "chart": "P",
                    "algebra": "d",
                    "rho": {"a*": {"p": "1/(p*q)"}, "b*": {"q": "1/(p*q)"}},
                },
            },
            "checks": [{"name": "stabilizers", "kind": "coisotropic_stabilizers", "params": {"backend": "act"}}],
        }
        scenario = load_dict(data)
        check = run(scenario, samples=20).checks[0]
        self.assertEqual(check.verdict, PASS, check.message)
        self.assertEqual(check.details["checked"], 20)
        backend = scenario.get("backends", "act")
        for point in sample_points(backend.chart, 20, avoid=backend.coefficients()):
            self.assertNotEqual(point[0] * point[1], 0)


class TestLibrary(unittest.TestCase):
    """Test cases for the shipped examples."""

    def test_documents(self):
        for name in list_examples():
            data = example_document(name)
            self.assertEqual(data["name"], name)
            self.assertTrue(describe(name))

    def test_unknown_example(self):
        with self.assertRaises(ScenarioError):
            example_document("no-such-example")

    def test_expected_verdicts(self):
        for name in list_examples():
            with self.subTest(example=name):
                report = run_example(name, samples=2)
                failed = sorted(c.name for c in report.checks if c.verdict != PASS)
                self.assertEqual(failed, sorted(EXPECTED_FAILURES.get(name, [])), report.render_text())
                for c in report.checks:
                    self.assertNotEqual(c.verdict, ERROR, c.message)
                jsonschema.validate(instance=report.to_dict(), schema=REPORT_SCHEMA)

    def test_relations_use_every_sample(self):
        named = [name for name in list_examples() if example_document(name).get("relations")]
        self.assertTrue(named)
        for name in named:
            scenario = load_dict(example_document(name))
            for relation in example_document(name)["relations"]:
                with self.subTest(example=name, relation=relation):
                    checks = [{"name": relation, "kind": "relation_lagrangian", "params": {"relation": relation}}]
                    check = run(scenario, samples=DEFAULT_SAMPLES, checks=checks).checks[0]
                    self.assertEqual(check.verdict, PASS, check.message)
                    self.assertGreaterEqual(check.details["points"], DEFAULT_SAMPLES)


if __name__ == '__main__':
    unittest.main()
