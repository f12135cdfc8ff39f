import pickle
from datetime import datetime, timedelta

import numpy as np
import pytest

import stubs
from hsforecast import solar
from hsforecast.errors import MissingContext, OutOfWindow, SlotTooSmall, TooFewSamples
from hsforecast.features import apply_standardizer, build_supervised, fit_standardizer, record_features
from hsforecast.hs import (MMFF_SLOTS, PERSISTENCE_1DA, HsForecastSystem, SlotReport, forecast,
                           partition_by_hour, train_all_in_one_group, train_hs)
from hsforecast.ingest import SolarRecord, SolarSeries, SynthConfig, generate_synthetic
from hsforecast.learners import POOL_BY_NAME, derive_seed
from hsforecast.mmff import mmff_predict, train_mmff
from hsforecast.pipeline import training_report_csv

CHEAP_POOL = (stubs.column(0), stubs.column(2), POOL_BY_NAME["GBM1"])
CANDIDATES = (stubs.AVG, POOL_BY_NAME["SVM2"])

PUBLISHED_WINNERS = ["1DA persistence", "RF", "SVM1", "RF", "RF", "SVM1", "ANN1", "ANN2", "SVM1",
                     "ANN3", "RF", "GBM3", "RF"]


@pytest.fixture(scope="module")
def small_year():
    series = generate_synthetic(SynthConfig(n_days=40, seed=11))
    return series, build_supervised(series)


@pytest.fixture(scope="module")
def system(small_year):
    series, rows = small_year
    return train_hs(rows, CHEAP_POOL, k_folds=5, seed=3, candidates=CANDIDATES, site=series.site)


def test_full_year_partitions_evenly():
    rows = build_supervised(generate_synthetic(SynthConfig(seed=0)))
    parts = partition_by_hour(rows)
    assert sorted(parts) == list(MMFF_SLOTS)
    assert all(len(p) == 365 for p in parts.values())


def test_partition_is_a_permutation(small_year):
    _, rows = small_year
    parts = partition_by_hour(rows)
    assert sum(len(p) for p in parts.values()) == len(rows)
    for h, p in parts.items():
        assert all(t.hour == h for t in p.target_times)
    merged = sorted(t for p in parts.values() for t in p.issue_times)
    assert merged == sorted(rows.issue_times)


def test_partition_single_hour(small_year):
    _, rows = small_year
    ten = rows.take(rows.target_hours == 10)
    parts = partition_by_hour(ten)
    assert [h for h, p in parts.items() if len(p)] == [10]


def test_slot_too_small():
    rows = build_supervised(generate_synthetic(SynthConfig(n_days=5, seed=0)))
    with pytest.raises(SlotTooSmall) as exc:
        train_hs(rows, CHEAP_POOL, k_folds=10)
    assert "8" in str(exc.value)


def test_report_lists_slots_in_order(system):
    assert [r.slot for r in system.report] == list(range(7, 20))
    assert system.report[0].winner == PERSISTENCE_1DA
    assert all(r.winner in {s.name for s in CANDIDATES} for r in system.report[1:])


def test_report_format_with_published_winner_list(system):
    fixture = tuple(SlotReport(7 + i, w, None if i == 0 else 1.0, None if i == 0 else 2.0)
                    for i, w in enumerate(PUBLISHED_WINNERS))
    text = training_report_csv(HsForecastSystem({}, system.scaler, system.site, False, fixture))
    lines = text.splitlines()
    assert lines[0] == "slot,winner,cv_nmae,cv_nrmse"
    assert lines[1] == "7,1DA persistence,N/A,N/A"
    assert [ln.split(",")[1] for ln in lines[1:]] == PUBLISHED_WINNERS
    assert lines[-1] == "19,RF,1.00,2.00"


def test_training_is_deterministic(small_year, system):
    series, rows = small_year
    again = train_hs(rows, CHEAP_POOL, k_folds=5, seed=3, candidates=CANDIDATES, site=series.site)
    assert again.report == system.report


def test_slot_model_depends_only_on_its_rows(small_year, system):
    _, rows = small_year
    parts = partition_by_hour(apply_standardizer(system.scaler, rows))
    alone = train_mmff(parts[12], CHEAP_POOL, 5, derive_seed(3, "slot", 12), CANDIDATES)
    assert pickle.dumps(alone) == pickle.dumps(system.per_slot[12])


def test_forecast_dispatches_to_target_hour(small_year, system):
    series, _ = small_year
    issue = datetime(2023, 1, 20, 9, tzinfo=series.site.tz)
    target, value = forecast(system, series, issue)
    assert target.hour == 10
    x = system.scaler.transform(np.array([record_features(series.get(issue))]))
    expected = max(0.0, float(mmff_predict(system.per_slot[10], x)[0]))
    assert value == expected
    other = max(0.0, float(mmff_predict(system.per_slot[11], x)[0]))
    assert other != expected


def record(ts, ghi, ghi_clr):
    return SolarRecord(timestamp=ts, ghi=ghi, ghi_clr=ghi_clr, mu=0.4, sigma=0.05, entropy=1.5)


def test_seven_am_uses_one_day_persistence(system):
    tz = system.site.tz
    prev = record(datetime(2023, 3, 1, 7, tzinfo=tz), 0.8 * 300.0, 300.0)
    today = record(datetime(2023, 3, 2, 7, tzinfo=tz), 123.0, 250.0)
    context = SolarSeries(system.site, (prev, today))
    target, value = forecast(system, context, datetime(2023, 3, 2, 6, tzinfo=tz))
    assert target == today.timestamp
    assert value == pytest.approx(200.0)


def test_seven_am_without_prior_day(system):
    tz = system.site.tz
    today = record(datetime(2023, 3, 2, 7, tzinfo=tz), 123.0, 250.0)
    with pytest.raises(MissingContext):
        forecast(system, SolarSeries(system.site, (today,)), datetime(2023, 3, 2, 6, tzinfo=tz))


def test_out_of_window(small_year, system):
    series, _ = small_year
    with pytest.raises(OutOfWindow):
        forecast(system, series, datetime(2023, 1, 20, 19, tzinfo=series.site.tz))
    with pytest.raises(OutOfWindow):
        forecast(system, series, datetime(2023, 1, 20, 3, tzinfo=series.site.tz))


def test_missing_issue_record(small_year, system):
    series, _ = small_year
    with pytest.raises(MissingContext):
        forecast(system, series, datetime(2024, 6, 1, 10, tzinfo=series.site.tz))


def test_forecast_ignores_future_records(small_year, system):
    series, _ = small_year
    issue = datetime(2023, 1, 25, 13, tzinfo=series.site.tz)
    past = SolarSeries(series.site, tuple(r for r in series if r.timestamp <= issue))
    assert forecast(system, past, issue) == forecast(system, series, issue)


def test_all_in_one_group(small_year):
    _, rows = small_year
    group = train_all_in_one_group(rows, CANDIDATES, CHEAP_POOL, k_folds=5, seed=1)
    assert list(group) == [s.name for s in CANDIDATES] + ["P"]
    assert group["P"].is_persistence
    preds = group["SVM2"].predict_rows(rows.X[:20])
    assert preds.shape == (20,) and np.all(np.isfinite(preds))
    with pytest.raises(TooFewSamples):
        train_all_in_one_group(rows.take(np.arange(3)), CANDIDATES, CHEAP_POOL, k_folds=5)


def test_clear_sky_persistence_product():
    assert solar.persistence_1da(0.8, 250.0) == pytest.approx(200.0)
