"""Tests for the command-line interface."""

import contextlib
import io
import json
import os
import tempfile
import unittest

from courant_verify.cli import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, main
from courant_verify.library import EXPECTED_FAILURES, list_examples

SCENARIO = {
    "version": 1,
    "name": "cli-heisenberg",
    "charts": {"R3": ["x", "y", "z"]},
    "backends": {"T": {"kind": "exact", "chart": "R3"}},
    "bivectors": {"pi": {"chart": "R3", "brackets": [{"left": "x", "right": "y", "value": "z"}]}},
    "connections": {"graph": {"kind": "poisson", "backend": "T", "bivector": "pi"}},
    "checks": [{"name": "dirac", "kind": "pseudo_dirac", "params": {"connection": "graph"}}],
}


class TestCLI(unittest.TestCase):
    """Test cases for the courant-verify commands and exit codes."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.scenario = self.write("scenario.json", json.dumps(SCENARIO))

    def write(self, name, text):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def invoke(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def test_list(self):
        code, out, _ = self.invoke("list")
        self.assertEqual(code, EXIT_PASS)
        self.assertIn("======= EXAMPLES =======", out)
        for name in list_examples():
            self.assertIn(name, out)

    def test_list_json(self):
        code, out, _ = self.invoke("list", "--format", "json")
        entries = {e["name"]: e for e in json.loads(out)}
        self.assertEqual(sorted(entries), list_examples())
        self.assertEqual(entries["nonpoisson-bivector"]["expected_failures"], EXPECTED_FAILURES["nonpoisson-bivector"])

    def test_verify(self):
        code, out, _ = self.invoke("verify", self.scenario, "--samples", "2")
        self.assertEqual(code, EXIT_PASS)
        self.assertIn("======= REPORT =======", out)
        self.assertIn("[PASS ] dirac", out)

    def test_verify_json_and_output(self):
        target = os.path.join(self.tmp.name, "report.json")
        code, out, _ = self.invoke("verify", self.scenario, "--format", "json", "--output", target)
        self.assertEqual(code, EXIT_PASS)
        printed = json.loads(out)
        with open(target, encoding="utf-8") as f:
            saved = json.load(f)
        self.assertEqual(saved["version"], 1)
        self.assertEqual(saved["scenario"], "cli-heisenberg")
        self.assertEqual(printed["summary"], saved["summary"])

    def test_failing_example(self):
        code, out, _ = self.invoke("example", "nonpoisson-bivector", "--format", "json", "--samples", "2")
        self.assertEqual(code, EXIT_FAIL)
        failed = sorted(c["name"] for c in json.loads(out)["checks"] if c["verdict"] == "fail")
        self.assertEqual(failed, sorted(EXPECTED_FAILURES["nonpoisson-bivector"]))

    def test_passing_example(self):
        code, _, _ = self.invoke("example", "heisenberg-poisson", "--samples", "2")
        self.assertEqual(code, EXIT_PASS)

    def test_unknown_example(self):
        code, _, err = self.invoke("example", "no-such-example")
        self.assertEqual(code, EXIT_ERROR)
        self.assertIn("unknown example", err)

    def test_invalid_json(self):
        code, _, err = self.invoke("verify", self.write("broken.json", "{\"version\": 1,"))
        self.assertEqual(code, EXIT_ERROR)
        self.assertIn("invalid JSON", err)

    def test_missing_file(self):
        code, _, _ = self.invoke("verify", os.path.join(self.tmp.name, "absent.json"))
        self.assertEqual(code, EXIT_ERROR)

    def test_schema_violation(self):
        data = dict(SCENARIO, version=3)
        code, _, _ = self.invoke("verify", self.write("old.json", json.dumps(data)))
        self.assertEqual(code, EXIT_ERROR)

    def test_build_vbdirac(self):
        code, out, _ = self.invoke("build-vbdirac", self.scenario, "--connection", "graph", "--samples", "2")
        self.assertEqual(code, EXIT_PASS)
        self.assertIn("build-vbdirac (vb_dirac)", out)

    def test_check_correspondence(self):
        code, out, _ = self.invoke(
            "check-correspondence", self.scenario, "--connection", "graph", "--samples", "2", "--format", "json"
        )
        self.assertEqual(code, EXIT_PASS)
        self.assertEqual(json.loads(out)["checks"][0]["kind"], "correspondence")

    def test_unknown_connection(self):
        code, _, err = self.invoke("check-correspondence", self.scenario, "--connection", "missing")
        self.assertEqual(code, EXIT_ERROR)
        self.assertIn("missing", err)

    def test_log_file(self):
        log = os.path.join(self.tmp.name, "run.log")
        self.invoke("verify", self.scenario, "--samples", "2", "--log-file", log, "--debug")
        with open(log, encoding="utf-8") as f:
            self.assertIn("Running check dirac", f.read())


if __name__ == '__main__':
    unittest.main()
