# -*- coding: utf-8 -*-

"""Tests of the package manifest."""

import ast
import unittest
from pathlib import Path

SETUP = Path(__file__).resolve().parents[1] / "setup.py"


def setup_keywords():
    tree = ast.parse(SETUP.read_text(encoding="utf-8"))
    for node in ast.walk(tree):
        if isinstance(node, ast.Call) and getattr(node.func, "id", None) == "setup":
            return {keyword.arg: keyword.value for keyword in node.keywords}
    return dict()


class TestSetup(unittest.TestCase):
    def test_manifest_parses(self):
        keywords = setup_keywords()
        self.assertEqual(ast.literal_eval(keywords["name"]), "platestruct")
        self.assertNotIn("author_email", keywords)

    def test_console_script(self):
        entry_points = ast.literal_eval(setup_keywords()["entry_points"])
        self.assertIn("platestruct=platestruct.cli:main", entry_points["console_scripts"])


if __name__ == "__main__":
    unittest.main()
