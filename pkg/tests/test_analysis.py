import csv
import math

import pytest

from skyauth import analysis
from skyauth.analysis import (
    HIBS_WINDOW_MESSAGES,
    OverheadParams,
    augmented_rate,
    loss_sweep,
    overhead_percent,
    overhead_sweep,
    recovery_sweep,
    recovery_worst_case,
    slot_success_prob,
    window_messages,
    write_csv,
)


class TestOverhead:
    def test_reference_point(self):
        params = OverheadParams(key_bits=128, digest_bits=128,
                                slot_duration=2.0, data_rate=6.0)
        assert overhead_percent(params) == 50.0

    def test_zero_security_bits(self):
        params = OverheadParams(key_bits=0, digest_bits=0)
        assert overhead_percent(params) == 0.0

    def test_doubling_slot_halves_overhead(self):
        base = OverheadParams(slot_duration=2.0)
        doubled = OverheadParams(slot_duration=4.0)
        assert overhead_percent(doubled) == overhead_percent(base) / 2

    def test_monotone_in_digest_bits(self):
        values = [
            overhead_percent(OverheadParams(digest_bits=bits))
            for bits in range(32, 513, 32)
        ]
        assert values == sorted(values)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            overhead_percent(OverheadParams(slot_duration=0))
        with pytest.raises(ValueError):
            overhead_percent(OverheadParams(data_rate=0))

    def test_augmented_rate_near_reported(self):
        # riding 3 frames/s of security on the 6.2 msg/s baseline
        assert augmented_rate(OverheadParams()) == pytest.approx(9.2)


class TestWindow:
    def test_two_second_slot_window(self):
        assert window_messages(2.0, 6.0) == 15

    def test_one_second_slot_window(self):
        assert window_messages(1.0, 6.0) == 9

    def test_comparison_window(self):
        assert HIBS_WINDOW_MESSAGES == 23


class TestSlotSuccess:
    def test_no_loss(self):
        assert slot_success_prob(0.0, 15) == 1.0
        assert slot_success_prob(0.0, 23) == 1.0

    def test_reference_value(self):
        assert slot_success_prob(0.05, 15) == pytest.approx(0.4633, abs=1e-4)

    def test_shorter_window_always_wins(self):
        for i in range(1, 100):
            p = i / 100
            assert slot_success_prob(p, 15) >= slot_success_prob(p, 23)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            slot_success_prob(-0.1, 15)
        with pytest.raises(ValueError):
            slot_success_prob(1.1, 15)


class TestRecoveryWorstCase:
    def test_small_case(self):
        assert recovery_worst_case(12, 6) == 924

    def test_large_case(self):
        count = recovery_worst_case(24, 12)
        assert count == 2_704_156
        assert abs(math.log2(count) - 21) < 0.5

    def test_degenerate(self):
        assert recovery_worst_case(7, 7) == 1
        assert recovery_worst_case(5, 0) == 1

    def test_invalid(self):
        with pytest.raises(ValueError):
            recovery_worst_case(5, 6)

    def test_exact_at_large_t(self):
        # exact integer arithmetic far beyond float precision
        assert recovery_worst_case(64, 32) == 1832624140942590534


class TestSweeps:
    def test_overhead_grid_monotone(self):
        columns, rows = overhead_sweep()
        assert columns == ["digest_bits", "slot_duration", "overhead_percent"]
        table = {(r["digest_bits"], r["slot_duration"]): r["overhead_percent"] for r in rows}
        digests = sorted({r["digest_bits"] for r in rows})
        durations = sorted({r["slot_duration"] for r in rows})
        for d in durations:
            col = [table[(dig, d)] for dig in digests]
            assert col == sorted(col)
        for dig in digests:
            row = [table[(dig, d)] for d in durations]
            assert row == sorted(row, reverse=True)

    def test_loss_sweep_shape(self):
        columns, rows = loss_sweep()
        assert columns[0] == "p_loss"
        assert "success_d2" in columns and "success_hibs" in columns
        for row in rows:
            if 0 < row["p_loss"] < 1:
                assert row["success_d2"] > row["success_hibs"]
        successes = [r["success_d2"] for r in rows]
        assert successes == sorted(successes, reverse=True)

    def test_recovery_sweep_values(self):
        columns, rows = recovery_sweep()
        by_rate = {r["adversary_rate"]: r for r in rows}
        assert by_rate[6.0]["subsets_d1"] == 924
        assert by_rate[6.0]["subsets_d2"] == 2_704_156
        assert by_rate[6.0]["subsets_d5"] > 2 ** 30
        assert by_rate[6.0]["subsets_hibs"] > 2 ** 42
        for name in ("subsets_d1", "subsets_d2", "subsets_d5"):
            curve = [r[name] for r in rows]
            assert curve == sorted(curve)

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            overhead_sweep(digest_bits_values=[])
        with pytest.raises(ValueError):
            loss_sweep(p_values=[])
        with pytest.raises(ValueError):
            recovery_sweep(adversary_rates=[])

    def test_csv_writing(self, tmp_path):
        columns, rows = loss_sweep(p_values=[0.0, 0.1])
        path = str(tmp_path / "loss.csv")
        write_csv(path, columns, rows)
        with open(path) as fh:
            parsed = list(csv.DictReader(fh))
        assert len(parsed) == 2
        assert float(parsed[1]["p_loss"]) == 0.1
        assert float(parsed[0]["success_d2"]) == 1.0
