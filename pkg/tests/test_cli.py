#!/usr/bin/env python3
"""
Unit tests for cli.py
"""

import json
import os
import shutil
import sys
import tempfile
import unittest

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cli import EXIT_CAP, EXIT_INPUT, EXIT_OK, RunConfig, build_parser, config_from_args, main, run
from config import DEFAULT_SEED
from flowcore import SpecError


class TestCli(unittest.TestCase):
    def setUp(self):
        """Set up test fixtures"""
        self.temp_dir = tempfile.mkdtemp()
        self.spec_path = os.path.join(self.temp_dir, "square.json")
        with open(self.spec_path, "w", encoding="utf-8") as f:
            json.dump({"rows": [2, 2], "cols": [2, 2]}, f)
        self.out = os.path.join(self.temp_dir, "out.json")

    def tearDown(self):
        """Clean up test fixtures"""
        shutil.rmtree(self.temp_dir)

    def read_out(self):
        with open(self.out, "r", encoding="utf-8") as f:
            return json.load(f)

    def test_points(self):
        """Test the points subcommand"""
        code = main(["points", self.spec_path, "--out", self.out])
        self.assertEqual(code, EXIT_OK)
        document = self.read_out()
        self.assertEqual(document["command"], "points")
        self.assertTrue(document["success"])
        self.assertEqual(document["result"]["count"], 3)
        self.assertEqual(document["result"]["points"][0], [[0, 2], [2, 0]])

    def test_output_is_deterministic(self):
        """Test that two runs write identical files"""
        main(["gb", self.spec_path, "--out", self.out])
        with open(self.out, "r", encoding="utf-8") as f:
            first = f.read()
        main(["gb", self.spec_path, "--out", self.out])
        with open(self.out, "r", encoding="utf-8") as f:
            second = f.read()
        self.assertEqual(first, second)

    def test_gb(self):
        """Test the gb subcommand on the 2x2 segment"""
        self.assertEqual(main(["gb", self.spec_path, "--out", self.out]), EXIT_OK)
        result = self.read_out()["result"]
        self.assertEqual(len(result["elements"]), 1)
        self.assertEqual(result["max_degree"], 2)
        self.assertFalse(result["truncated"])

    def test_gb_with_ranking(self):
        """Test a revlex order read from a ranking literal"""
        code = main(["gb", self.spec_path, "--order", "revlex", "--ranking", "[1, 0, 2]", "--out", self.out])
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.read_out()["result"]["elements"][0]["lead"], {"1": 2})

    def test_bad_ranking(self):
        """Test that a ranking that is not a permutation is an input error"""
        code = main(["gb", self.spec_path, "--ranking", "[0, 0, 1]", "--out", self.out])
        self.assertEqual(code, EXIT_INPUT)
        self.assertFalse(os.path.exists(self.out))

    def test_cells_and_triangulate(self):
        """Test the cell and triangulation subcommands"""
        self.assertEqual(main(["cells", self.spec_path, "--out", self.out]), EXIT_OK)
        self.assertEqual(self.read_out()["result"]["count"], 2)
        self.assertEqual(main(["triangulate", self.spec_path, "--out", self.out]), EXIT_OK)
        self.assertTrue(self.read_out()["result"]["cross_cell"]["success"])

    def test_decompose(self):
        """Test splitting a point of 3F"""
        code = main(["decompose", self.spec_path, "--point", "[[3, 3], [3, 3]]", "--k", "3", "--out", self.out])
        self.assertEqual(code, EXIT_OK)
        parts = self.read_out()["result"]["parts"]
        self.assertEqual(len(parts), 3)
        self.assertEqual([[sum(p[i][j] for p in parts) for j in range(2)] for i in range(2)], [[3, 3], [3, 3]])

    def test_moves_and_fiber_check(self):
        """Test the move and fiber subcommands"""
        self.assertEqual(main(["moves", self.spec_path, "--out", self.out]), EXIT_OK)
        self.assertEqual(len(self.read_out()["result"]["moves"]), 1)
        code = main(["fiber-check", self.spec_path, "--target", "[[2, 2], [2, 2]]", "--k", "2", "--out", self.out])
        self.assertEqual(code, EXIT_OK)
        result = self.read_out()["result"]
        self.assertTrue(result["connected"])
        self.assertEqual(result["size"], 2)

    def test_sample(self):
        """Test the fiber walk subcommand"""
        code = main(["sample", self.spec_path, "--target", "[[2, 2], [2, 2]]", "--k", "2",
                     "--steps", "20", "--seed", "3", "--out", self.out])
        self.assertEqual(code, EXIT_OK)
        document = self.read_out()
        self.assertEqual(document["seed"], 3)
        self.assertEqual(len(document["result"]["tables"]), 2)

    def test_sample_needs_seed(self):
        """Test that sample without a seed is an input error and writes nothing"""
        code = main(["sample", self.spec_path, "--target", "[[2, 2], [2, 2]]", "--k", "2",
                     "--steps", "20", "--out", self.out])
        self.assertEqual(code, EXIT_INPUT)
        self.assertFalse(os.path.exists(self.out))

    def test_gb_time_cap(self):
        """Test that a Groebner run over the time cap exits with the cap code"""
        big = os.path.join(self.temp_dir, "big.json")
        with open(big, "w", encoding="utf-8") as f:
            json.dump({"rows": [3, 3, 3], "cols": [3, 3, 3]}, f)
        code = main(["gb", big, "--order", "revlex", "--cap-seconds", "0.001", "--out", self.out])
        self.assertEqual(code, EXIT_CAP)
        self.assertFalse(os.path.exists(self.out))

    def test_worstcase(self):
        """Test the worst-case family subcommand"""
        self.assertEqual(main(["worstcase", "--transport", "2", "4", "--out", self.out]), EXIT_OK)
        result = self.read_out()["result"]
        self.assertEqual(result["instance"]["degree"], 2)
        self.assertTrue(result["verification"]["success"])

    def test_bipartize(self):
        """Test the bipartization subcommand"""
        self.assertEqual(main(["bipartize", self.spec_path, "--k-max", "2", "--out", self.out]), EXIT_OK)
        result = self.read_out()["result"]
        self.assertEqual(result["N"], 4)
        self.assertTrue(result["verification"]["success"])

    def test_missing_spec_file(self):
        """Test that an unreadable spec exits with the input code"""
        code = main(["points", os.path.join(self.temp_dir, "missing.json"), "--out", self.out])
        self.assertEqual(code, EXIT_INPUT)
        self.assertFalse(os.path.exists(self.out))

    def test_point_cap(self):
        """Test that the point cap exits with the cap code and writes nothing"""
        code = main(["points", self.spec_path, "--cap-points", "2", "--out", self.out])
        self.assertEqual(code, EXIT_CAP)
        self.assertFalse(os.path.exists(self.out))

    def test_invalid_seed(self):
        """Test that a negative seed is an input error"""
        self.assertEqual(main(["points", self.spec_path, "--seed", "-1", "--out", self.out]), EXIT_INPUT)


class TestRunConfig(unittest.TestCase):
    def test_validate(self):
        """Test the checks on a run configuration"""
        with self.assertRaises(SpecError):
            RunConfig("gb").validate()
        with self.assertRaises(SpecError):
            RunConfig("unknown", spec_path="x.json").validate()
        with self.assertRaises(SpecError):
            RunConfig("gb", spec_path="x.json", time_cap=0).validate()
        with self.assertRaises(SpecError):
            RunConfig("sample", spec_path="x.json").validate()
        config = RunConfig("sample", spec_path="x.json", seed=5)
        config.validate()
        self.assertEqual(config.seed, 5)
        config = RunConfig("gb", spec_path="x.json")
        config.validate()
        self.assertEqual(config.seed, DEFAULT_SEED)
        RunConfig("worstcase").validate()

    def test_config_from_args(self):
        """Test that subcommand flags land in options"""
        args = build_parser().parse_args(["fiber-check", "spec.json", "--target", "[1]", "--k", "2"])
        config = config_from_args(args)
        self.assertEqual(config.spec_path, "spec.json")
        self.assertEqual(config.options["k"], 2)
        self.assertEqual(config.options["target"], "[1]")
        self.assertNotIn("seed", config.options)

    def test_run_reports_input_error(self):
        """Test run() on a config without the spec it needs"""
        self.assertEqual(run(RunConfig("points")), EXIT_INPUT)


if __name__ == '__main__':
    unittest.main()
