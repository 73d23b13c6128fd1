#!/usr/bin/env python
"""
Test cases for the ladder verdict rules.
"""

import math
import os
import sys
import unittest

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from report_models import RatioRow
from verification.verdict import finite_verdict, loglog_slope, make_report, ratio_verdict, safe_ratio

SCALES = [0.4, 0.2, 0.1, 0.05]


class TestSlope(unittest.TestCase):

    def test_power_law(self):
        ratios = [R ** -1.5 for R in SCALES]
        self.assertAlmostEqual(loglog_slope(SCALES, ratios), -1.5, places=12)

    def test_needs_two_rungs(self):
        self.assertIsNone(loglog_slope([0.4], [1.0]))
        self.assertIsNone(loglog_slope(SCALES, [0.0, 0.0, 0.0, 1.0]))


class TestRatioVerdict(unittest.TestCase):

    def test_constant_ratio_is_bounded(self):
        verdict, slope = ratio_verdict(SCALES, [2.0] * 4)
        self.assertEqual(verdict, "bounded")
        self.assertAlmostEqual(slope, 0.0, places=12)

    def test_decaying_ratio_is_bounded(self):
        verdict, slope = ratio_verdict(SCALES, [R ** 2 for R in SCALES])
        self.assertEqual(verdict, "bounded")
        self.assertAlmostEqual(slope, 2.0, places=12)

    def test_growing_ratio_is_unbounded(self):
        verdict, _ = ratio_verdict(SCALES, [1.0 / R for R in SCALES])
        self.assertEqual(verdict, "unbounded")

    def test_slow_growth_within_tolerance(self):
        verdict, _ = ratio_verdict(SCALES, [R ** -0.1 for R in SCALES])
        self.assertEqual(verdict, "bounded")

    def test_only_growth_is_penalized(self):
        self.assertEqual(ratio_verdict(SCALES, [R ** 0.5 for R in SCALES])[0], "bounded")
        self.assertEqual(ratio_verdict(SCALES, [R ** -0.19 for R in SCALES])[0], "bounded")
        self.assertEqual(ratio_verdict(SCALES, [R ** -0.25 for R in SCALES])[0], "unbounded")

    def test_infinite_ratio(self):
        self.assertEqual(ratio_verdict(SCALES, [1.0, 1.0, math.inf, 1.0])[0], "unbounded")

    def test_noisy_rungs(self):
        self.assertEqual(ratio_verdict(SCALES, [1.0] * 4, [0.0, 0.3, 0.0, 0.0])[0], "inconclusive")
        self.assertEqual(ratio_verdict(SCALES, [1.0] * 4, [0.0, 0.3, 0.0, 0.0], error_tol=1.0)[0], "bounded")

    def test_all_zero(self):
        self.assertEqual(ratio_verdict(SCALES, [0.0] * 4), ("bounded", 0.0))

    def test_single_positive_rung(self):
        self.assertEqual(ratio_verdict(SCALES, [0.0, 0.0, 0.0, 1.0])[0], "inconclusive")

    def test_finite_rule(self):
        self.assertEqual(finite_verdict([1.0, 30.0]), "bounded")
        self.assertEqual(finite_verdict([1.0, math.inf]), "unbounded")


class TestReport(unittest.TestCase):

    def _rows(self, ratios):
        return [RatioRow(scale=R, lhs=r, rhs0=1.0, ratio=r) for R, r in zip(SCALES, ratios)]

    def test_safe_ratio(self):
        self.assertEqual(safe_ratio(0.0, 0.0), 0.0)
        self.assertEqual(safe_ratio(1.0, 0.0), math.inf)
        self.assertEqual(safe_ratio(math.inf, 2.0), math.inf)
        self.assertEqual(safe_ratio(3.0, 2.0), 1.5)

    def test_constant_is_largest_ratio(self):
        report = make_report("demo", self._rows([1.0, 1.5, 1.2, 1.1]), {})
        self.assertEqual(report.verdict, "bounded")
        self.assertEqual(report.constant, 1.5)
        self.assertEqual(len(report.csv_rows()), 4)
        self.assertEqual(report.csv_rows()[0], ["demo", 0.4, 1.0, 1.0, 1.0, "bounded"])

    def test_frontier(self):
        report = make_report("demo", self._rows([1.0, 1.1, 1.2, 1.3]), {}, frontier=True)
        self.assertEqual(report.verdict, "frontier")
        report = make_report("demo", self._rows([1.0, 1.0, math.inf, 1.0]), {}, frontier=True)
        self.assertEqual(report.verdict, "unbounded")
        self.assertEqual(report.constant, math.inf)
        self.assertEqual(len(report.plot_points()), 3)


if __name__ == "__main__":
    unittest.main()
