import io
import math

import numpy as np
import pytest

import tickvol as tv
from tickvol.ingest import (
    RawTickRecord,
    clean_records,
    clean_ticks,
    parse_tick_csv,
    read_series_csv,
    spread_same_timestamp,
    write_series_csv,
)


class TestParse:
    def test_empty_after_header(self):
        records, malformed = parse_tick_csv("timestamp,price,condition\n")
        assert records == [] and malformed == []

    def test_simple_row(self):
        records, _ = parse_tick_csv("timestamp,price,condition\n34210,39.41,\n")
        assert records == [RawTickRecord(34210.0, 39.41, None)]

    def test_condition_kept(self):
        records, _ = parse_tick_csv("timestamp,price,condition\n34210,39.41,Z\n")
        assert records[0].condition == "Z"

    def test_malformed_row_cites_line(self):
        text = "timestamp,price,condition\n34210,39.41,\n34210,abc,\n34211,40.0,\n"
        records, malformed = parse_tick_csv(text, max_malformed_frac=0.5)
        assert len(records) == 2
        assert malformed[0][0] == 3 and "abc" in malformed[0][1]

    def test_missing_header(self):
        with pytest.raises(tv.FormatError):
            parse_tick_csv("time,px\n1,2\n")
        with pytest.raises(tv.FormatError):
            parse_tick_csv("")

    def test_malformed_fraction_aborts(self):
        rows = ["timestamp,price,condition"] + ["34210,39.41,"] * 50 + ["bad,row,"]
        with pytest.raises(tv.FormatError):
            parse_tick_csv("\n".join(rows) + "\n")

    def test_nonpositive_price_malformed(self):
        _, malformed = parse_tick_csv(
            "timestamp,price,condition\n34210,-1.0,\n", max_malformed_frac=1.0)
        assert len(malformed) == 1

    def test_bytes_input(self):
        records, _ = parse_tick_csv(b"timestamp,price,condition\n34210,39.41,\n")
        assert len(records) == 1


class TestSpread:
    def test_single_trade_unchanged(self):
        np.testing.assert_array_equal(spread_same_timestamp(34210.0, 1), [34210.0])

    def test_worked_example_three_trades(self):
        # 34210 + j/3 at 0.01-second resolution
        out = spread_same_timestamp(34210.0, 3)
        np.testing.assert_array_equal(out, np.array([34210.0, 34210.33, 34210.67]))

    def test_two_trades_at_zero(self):
        np.testing.assert_array_equal(spread_same_timestamp(0.0, 2), [0.0, 0.5])

    def test_large_group_stays_distinct(self):
        out = spread_same_timestamp(100.0, 150)
        assert np.all(np.diff(out) > 0)
        assert out.size == 150

    def test_spread_stays_inside_the_second(self):
        for k in (2, 3, 7, 99):
            out = spread_same_timestamp(5.0, k)
            assert np.all(out >= 5.0) and np.all(out < 6.0)
            assert np.all(np.diff(out) > 0)


def _mkrec(ts, price=40.0, cond=None):
    return RawTickRecord(ts, price, cond)


class TestCleaning:
    def test_premarket_dropped(self):
        series, report = clean_ticks([_mkrec(34100.0), _mkrec(34210.0)])
        assert len(series) == 1
        assert report.dropped_session == 1

    def test_aftermarket_dropped(self):
        series, report = clean_ticks([_mkrec(34210.0), _mkrec(57601.0)])
        assert report.dropped_session == 1

    def test_worked_example_spread_before_rebase(self):
        records = [_mkrec(34210.0, 40.0), _mkrec(34210.0, 40.1), _mkrec(34210.0, 40.2)]
        t, p, _ = clean_records(records)
        np.testing.assert_array_equal(t + 34200.0, [34210.0, 34210.33, 34210.67])
        np.testing.assert_array_equal(p, [40.0, 40.1, 40.2])  # order preserved

    def test_rebased_horizon(self):
        series, _ = clean_ticks([_mkrec(34210.0), _mkrec(57600.0)])
        assert series.horizon_T == 23400.0
        assert series.times[-1] <= 23400.0
        assert series.clean_flag

    def test_prices_are_logs(self):
        series, _ = clean_ticks([_mkrec(40000.0, 50.0)])
        assert series.log_prices[0] == pytest.approx(math.log(50.0))

    def test_bad_conditions_dropped(self):
        recs = [_mkrec(40000.0, 50.0, "Z"), _mkrec(40001.0, 50.0, None)]
        series, report = clean_ticks(recs, bad_conditions={"Z"})
        assert len(series) == 1 and report.dropped_condition == 1

    def test_all_bad_conditions_raises(self):
        recs = [_mkrec(40000.0, 50.0, "Z")]
        with pytest.raises(tv.EmptySeriesError):
            clean_ticks(recs, bad_conditions={"Z"})

    def test_empty_input_raises(self):
        with pytest.raises(tv.EmptySeriesError):
            clean_ticks([])

    def test_session_start_exact_is_boundary_dropped(self):
        # a trade at exactly 09:30:00 rebases to t=0, outside (0, T]
        _, report = clean_ticks([_mkrec(34200.0), _mkrec(34210.0)])
        assert report.dropped_boundary == 1

    def test_output_strictly_increasing(self):
        recs = [_mkrec(34210.0 + i // 3) for i in range(30)]
        series, _ = clean_ticks(recs)
        assert np.all(np.diff(series.times) > 0)

    def test_idempotent_on_clean_data(self):
        recs = [_mkrec(34210.0), _mkrec(34210.0), _mkrec(34215.0), _mkrec(34216.0)]
        t1, p1, _ = clean_records(recs)
        again = [RawTickRecord(ts, price, None) for ts, price in zip(t1, p1)]
        t2, p2, _ = clean_records(again, session_start=0.0, session_end=23400.0)
        np.testing.assert_array_equal(t1, t2)
        np.testing.assert_array_equal(p1, p2)

    def test_outlier_filter_optional(self):
        recs = [_mkrec(34210.0 + i, 40.0) for i in range(20)]
        recs[10] = _mkrec(34220.0, 4000.0)  # fat-finger price
        series_default, rep_default = clean_ticks(recs)
        assert rep_default.dropped_outlier == 0  # off by default
        series_filtered, rep_filtered = clean_ticks(recs, outlier_window=5,
                                                    outlier_multiplier=10.0)
        assert rep_filtered.dropped_outlier == 1
        assert len(series_filtered) == len(series_default) - 1


class TestSeriesCsvRoundTrip:
    def test_bit_exact_round_trip(self, tmp_path, rng):
        times = np.sort(rng.uniform(0.01, 23400.0, 200))
        prices = rng.normal(3.5, 0.01, 200)
        series = tv.TickSeries(23400.0, times, prices, clean_flag=True)
        path = tmp_path / "series.csv"
        write_series_csv(series, path)
        back = read_series_csv(path)
        np.testing.assert_array_equal(back.times, series.times)
        np.testing.assert_array_equal(back.log_prices, series.log_prices)
        assert back.horizon_T == series.horizon_T
        assert back.clean_flag == series.clean_flag

    def test_cleaned_csv_after_cleaning_round_trips(self, tmp_path):
        recs = [_mkrec(34210.0, 40.0), _mkrec(34210.0, 40.1), _mkrec(35000.0, 41.0)]
        series, _ = clean_ticks(recs)
        path = tmp_path / "clean.csv"
        write_series_csv(series, path)
        back = read_series_csv(path)
        np.testing.assert_array_equal(back.times, series.times)
        np.testing.assert_array_equal(back.log_prices, series.log_prices)

    def test_bad_metadata_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,log_price\n1.0,2.0\n")
        with pytest.raises(tv.FormatError):
            read_series_csv(path)
