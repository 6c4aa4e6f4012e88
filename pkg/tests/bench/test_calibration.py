import tempfile
import unittest
from pathlib import Path

import pytest

from bench.calibration import TABLE1, Calibration, calibrate, load_table_csv, modeled_table
from cipher.errors import InvalidInputError


class TestCalibrate(unittest.TestCase):
    def setUp(self):
        self.calibration = calibrate([(row.size_kb, row.total_s) for row in TABLE1])

    def test_table_fit_is_linear_enough(self):
        """
        The least-squares line through the dimension table explains at least 95% of the variance.
        """
        self.assertGreaterEqual(self.calibration.r_squared, 0.95)
        self.assertAlmostEqual(self.calibration.bandwidth_kbps, 10.65, delta=0.05)
        self.assertAlmostEqual(self.calibration.latency_s, 24.68, delta=0.05)

    def test_every_row_within_thirty_percent(self):
        for row in modeled_table(self.calibration):
            self.assertLessEqual(abs(row.relative_error), 0.30, row)

    def test_1070_kb_row(self):
        row = next(r for r in modeled_table(self.calibration) if r.size_kb == 1070.0)
        self.assertAlmostEqual(row.modeled_s, 125.1, delta=0.2)
        self.assertLessEqual(abs(row.modeled_s - 120.7) / 120.7, 0.30)

    def test_exact_two_points(self):
        calibration = calibrate([(0.0, 3.0), (8.0, 4.0)])
        self.assertAlmostEqual(calibration.bandwidth_kbps, 8.0)
        self.assertAlmostEqual(calibration.latency_s, 3.0)
        self.assertAlmostEqual(calibration.r_squared, 1.0)

    def test_single_distinct_size(self):
        with self.assertRaises(InvalidInputError):
            calibrate([(5.0, 1.0), (5.0, 2.0)])
        with self.assertRaises(InvalidInputError):
            calibrate([(5.0, 1.0)])

    def test_time_must_grow_with_size(self):
        with self.assertRaises(InvalidInputError):
            calibrate([(1.0, 5.0), (2.0, 4.0)])

    def test_predict_uses_the_channel_model(self):
        self.assertAlmostEqual(self.calibration.predict(0), self.calibration.latency_s)


class TestTableCsv:
    @pytest.fixture
    def tmp(self):
        with tempfile.TemporaryDirectory() as tmp:
            yield Path(tmp)

    def test_header_is_optional(self, tmp):
        path = tmp / "table.csv"
        path.write_text("size_kb,total_s\n6.97,19.8\n1100,137\n")
        assert load_table_csv(path) == [(6.97, 19.8), (1100.0, 137.0)]
        path.write_text("6.97,19.8\n")
        assert load_table_csv(path) == [(6.97, 19.8)]

    def test_bad_row(self, tmp):
        path = tmp / "table.csv"
        path.write_text("size_kb,total_s\n6.97,fast\n")
        with pytest.raises(InvalidInputError):
            load_table_csv(path)

    def test_calibration_json(self):
        calibration = Calibration(bandwidth_kbps=10.0, latency_s=1.0, r_squared=0.5)
        assert Calibration.model_validate_json(calibration.model_dump_json()) == calibration
