#!/usr/bin/env python3
"""Test script for the command line interface"""

import contextlib
import io
import json
import logging
import sys
import unittest
from unittest import mock

from cli import build_parser, run
from config import get_settings, use_settings
from logging_config import configure_logging
from main import main
from selftest import FIXTURE_DIR


def fixture(name):
    return str(FIXTURE_DIR / name)


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.settings = get_settings()

    def tearDown(self):
        use_settings(self.settings)

    def invoke(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = run(list(argv))
        return code, out.getvalue(), err.getvalue()


class TestCommands(CliTestCase):
    def test_verify(self):
        code, out, _ = self.invoke("verify", fixture("example_5_1_phi.json"))
        self.assertEqual(code, 0)
        self.assertTrue(out.rstrip().endswith("global = -3, locals = [-4, 1], residual = 0, PASS"))
        code, out, _ = self.invoke("verify", fixture("example_5_1_psi.json"))
        self.assertIn("locals = [0, -3]", out)

    def test_contribution_with_parameter(self):
        code, out, _ = self.invoke("contribution", fixture("example_5_2_M1.json"), "--k", "5")
        self.assertEqual(code, 0)
        self.assertEqual(out.strip(), "local contribution of M1(k=5) = 4")

    def test_global_trace(self):
        code, out, _ = self.invoke("global-trace", fixture("example_5_2_global.json"), "--k", "4")
        self.assertEqual((code, out.strip()), (0, "global trace = 3"))

    def test_localize(self):
        code, out, _ = self.invoke("localize", fixture("cross_hyperbolic_localization.json"))
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("theta = 1 "))

    def test_local_trace_table(self):
        code, out, _ = self.invoke("local-trace", fixture("example_5_1_phi.json"))
        self.assertEqual(code, 0)
        self.assertIn("y0_pos", out)
        self.assertIn("[0:1:0]", out)

    def test_index_and_cc(self):
        code, out, _ = self.invoke("index", fixture("circle_index.json"))
        self.assertEqual(code, 0)
        self.assertTrue(out.rstrip().endswith("Euler integral = 0, PASS"))
        code, out, _ = self.invoke("index", fixture("example_5_2_M1.json"), "--k", "2")
        self.assertTrue(out.rstrip().endswith("local contribution = 1, PASS"))
        code, out, _ = self.invoke("cc", fixture("interval_index.json"))
        self.assertEqual(code, 0)
        self.assertIn("multiplicity", out)

    def test_validate(self):
        code, out, _ = self.invoke("validate", fixture("example_5_1_phi.json"))
        self.assertEqual(code, 0)
        self.assertIn("is valid", out)

    def test_json_reports(self):
        code, out, _ = self.invoke("verify", fixture("example_5_1_phi.json"), "--json")
        report = json.loads(out)
        self.assertEqual(report["verdict"], "PASS")
        self.assertEqual(report["locals"], {"y=0": "-4", "[0:1:0]": "1"})


class TestFailures(CliTestCase):
    def test_corrupted_input(self):
        code, out, err = self.invoke("localize", fixture("corrupted_equivariance.json"))
        self.assertEqual(code, 2)
        self.assertEqual(out, "")
        self.assertTrue(err.startswith("EquivarianceViolation:"))

    def test_corrupted_input_as_json(self):
        code, out, _ = self.invoke("localize", fixture("corrupted_equivariance.json"), "--json")
        self.assertEqual(code, 2)
        self.assertEqual(json.loads(out)["error"], "EquivarianceViolation")

    def test_wrong_problem_kind(self):
        code, _, err = self.invoke("verify", fixture("interval_index.json"))
        self.assertEqual(code, 2)
        self.assertIn("ProblemFormatError", err)

    def test_missing_file_and_bad_arguments(self):
        self.assertEqual(self.invoke("verify", fixture("absent.json"))[0], 2)
        self.assertEqual(self.invoke("explode")[0], 2)
        self.assertEqual(self.invoke("localize", fixture("line_constant_localization.json"), "--tolerance", "-1")[0], 2)

    def test_tolerance_option(self):
        code, out, _ = self.invoke("localize", fixture("line_constant_localization.json"), "--tolerance", "1/1000000")
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("theta = -1 "))

    def test_parser_lists_every_command(self):
        parser = build_parser()
        for command in ("validate", "localize", "local-trace", "contribution", "global-trace", "verify", "cc", "index"):
            args = parser.parse_args([command, "problem.json", "--k", "2"])
            self.assertEqual((args.command, args.k), (command, 2))
        args = parser.parse_args(["selftest", "--instances", "5", "--seed", "3", "--json"])
        self.assertEqual((args.instances, args.seed, args.json), (5, 3, True))


class TestEntrypoint(CliTestCase):
    def setUp(self):
        super().setUp()
        root = logging.getLogger()
        self.saved_logging = (root.level, root.handlers[:])

    def tearDown(self):
        root = logging.getLogger()
        root.setLevel(self.saved_logging[0])
        root.handlers = self.saved_logging[1]
        super().tearDown()

    def test_configure_logging(self):
        configure_logging("TEST", level=logging.DEBUG)
        self.assertEqual(logging.getLogger().level, logging.DEBUG)
        self.assertEqual(logging.getLogger("hypothesis").level, logging.WARNING)
        self.assertEqual(logging.getLogger("dotenv").level, logging.WARNING)
        self.assertEqual(logging.getLogger("spectral").getEffectiveLevel(), logging.DEBUG)

    def test_main_runs_a_command(self):
        out = io.StringIO()
        argv = ["main.py", "contribution", fixture("example_5_2_M1.json"), "--k", "2"]
        with mock.patch.object(sys, "argv", argv), contextlib.redirect_stdout(out):
            code = main()
        self.assertEqual(code, 0)
        self.assertEqual(out.getvalue().strip(), "local contribution of M1(k=2) = 1")


if __name__ == "__main__":
    unittest.main()
