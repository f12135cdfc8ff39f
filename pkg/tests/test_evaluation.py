from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hsforecast.errors import IoFailure, LengthMismatch, ZeroBaseline, ZeroNormalizer
from hsforecast.evaluation import (AIO_GROUP, C_OPT, HS_GROUP, MetricPair, best_model, breakdown,
                                   build_report, emit_report, improvement, nmae, nrmse, overall_csv)

finite = st.floats(0, 1500, allow_nan=False)
pairs = st.integers(1, 40).flatmap(
    lambda n: st.tuples(arrays(float, n, elements=finite), arrays(float, n, elements=finite)))


def test_nmae_examples():
    assert nmae([100, 200], [110, 190], 150) == pytest.approx(6.667, abs=1e-3)
    assert nmae([0], [50], 500) == pytest.approx(10.0)
    assert nmae([3, 4], [3, 4], 10) == 0.0


def test_nrmse_examples():
    assert nrmse([100, 200], [110, 190], 150) == pytest.approx(6.667, abs=1e-3)
    assert nrmse([0, 0], [0, 10], 100) == pytest.approx(7.071, abs=1e-3)
    assert nrmse([3, 4], [3, 4], 10) == 0.0


@pytest.mark.parametrize("fn", [nmae, nrmse])
def test_metric_errors(fn):
    with pytest.raises(LengthMismatch):
        fn([1, 2], [1], 10)
    with pytest.raises(LengthMismatch):
        fn([], [], 10)
    with pytest.raises(ZeroNormalizer):
        fn([1], [2], 0)


def test_improvement_examples():
    assert improvement(7.70, 6.73) == pytest.approx(12.60, abs=0.01)
    assert improvement(10.91, 10.07) == pytest.approx(7.74, abs=0.3)
    assert improvement(5.0, 5.0) == 0.0
    with pytest.raises(ZeroBaseline):
        improvement(0.0, 1.0)


@given(pairs)
def test_rmse_dominates_mae(yy):
    y, y_hat = yy
    assert nrmse(y, y_hat, 100) >= nmae(y, y_hat, 100) - 1e-9


@given(pairs, st.randoms(use_true_random=False), st.floats(0.01, 100))
def test_permutation_and_scale_invariance(yy, rnd, c):
    y, y_hat = yy
    perm = list(range(len(y)))
    rnd.shuffle(perm)
    for fn in (nmae, nrmse):
        base = fn(y, y_hat, 100)
        assert fn(y[perm], y_hat[perm], 100) == pytest.approx(base, abs=1e-9)
        assert fn(c * y, c * y_hat, c * 100) == pytest.approx(base, rel=1e-9, abs=1e-9)


@given(st.floats(0.1, 100), st.floats(0, 200))
def test_improvement_sign(a, h):
    imp = improvement(a, h)
    assert (imp > 0) == (h < a)


def hourly_times(n, start=datetime(2023, 1, 1, 7)):
    return [start + timedelta(hours=i) for i in range(n)]


def test_breakdown_single_hour():
    times = [datetime(2023, 1, d, 10) for d in range(1, 6)]
    by_hour, by_month = breakdown(np.ones(5), np.zeros(5), times, 1.0)
    assert list(by_hour) == [10] and list(by_month) == [1]


def test_breakdown_one_sample_per_month():
    times = [datetime(2023, m, 15, 12) for m in range(1, 13)]
    _, by_month = breakdown(np.arange(12.0), np.arange(12.0), times, 5.0)
    assert sorted(by_month) == list(range(1, 13))
    assert all(mp == MetricPair(0.0, 0.0) for mp in by_month.values())


@given(st.integers(1, 200), st.integers(0, 1000))
def test_pooled_nmae_is_weighted_hourly_mean(n, seed):
    rng = np.random.default_rng(seed)
    times = [datetime(2023, 1, 1) + timedelta(hours=int(h)) for h in rng.integers(0, 24 * 60, n)]
    y, y_hat = rng.uniform(0, 900, n), rng.uniform(0, 900, n)
    by_hour, _ = breakdown(y, y_hat, times, 300.0)
    counts = {h: sum(t.hour == h for t in times) for h in by_hour}
    pooled = sum(by_hour[h].nmae * counts[h] for h in by_hour) / n
    assert pooled == pytest.approx(nmae(y, y_hat, 300.0), rel=1e-9)


def test_breakdown_length_mismatch():
    with pytest.raises(LengthMismatch):
        breakdown([1, 2], [1, 2], hourly_times(3), 1.0)


def small_report():
    times = [datetime(2023, 1, d, h) for d in (1, 2) for h in range(7, 20)]
    y = np.linspace(100, 600, 26)
    fc = {
        (HS_GROUP, C_OPT): y + 5,
        (HS_GROUP, "RF"): y + 8,
        (HS_GROUP, "GBM1"): y - 30,
        (AIO_GROUP, "RF"): y + 10,
        (AIO_GROUP, "P"): y - 9,
    }
    return build_report(y, fc, times)


def test_report_pairs_same_blender_and_best_aio():
    rep = small_report()
    assert rep.baseline == (AIO_GROUP, "P")
    assert set(rep.improvements) == {(HS_GROUP, C_OPT), (HS_GROUP, "RF")}
    imp_a, imp_r = rep.improvements[(HS_GROUP, "RF")]
    assert imp_a == pytest.approx(20.0) and imp_r == pytest.approx(20.0)
    imp_a, _ = rep.improvements[(HS_GROUP, C_OPT)]
    assert imp_a == pytest.approx(100 * 4 / 9)


def test_overall_csv_layout():
    text = overall_csv(small_report())
    lines = text.splitlines()
    assert lines[0] == "model,group,nmae,nrmse,imp_a,imp_r"
    assert lines[3].startswith("GBM1,HS,") and lines[3].endswith(",N/A,N/A")
    assert lines[4].startswith("RF,all-in-one,") and lines[4].endswith("N/A,N/A")
    for line in lines[1:]:
        for cell in line.split(",")[2:]:
            assert cell == "N/A" or len(cell.split(".")[1]) == 2


def test_best_model_tie_breaks_on_listing_order():
    overall = {(AIO_GROUP, "A"): MetricPair(1, 2), (AIO_GROUP, "B"): MetricPair(1, 2),
               (AIO_GROUP, "C"): MetricPair(0.5, 2)}
    assert best_model(overall, AIO_GROUP) == (AIO_GROUP, "C")
    del overall[(AIO_GROUP, "C")]
    assert best_model(overall, AIO_GROUP) == (AIO_GROUP, "A")


def test_emit_report_is_deterministic(tmp_path):
    a = emit_report(small_report(), tmp_path / "a", ["csv", "svg"])
    b = emit_report(small_report(), tmp_path / "b", ["csv", "svg"])
    names = sorted(p.name for p in a)
    assert names == sorted(p.name for p in b)
    assert {"overall.csv", "by_hour.csv", "by_month.csv", "by_hour_nmae.svg", "by_month_nrmse.svg"} <= set(names)
    for pa, pb in zip(sorted(a), sorted(b)):
        assert pa.read_bytes() == pb.read_bytes()
    assert pa.parent != pb.parent


def test_emit_report_by_hour_rows(tmp_path):
    emit_report(small_report(), tmp_path, ["csv"])
    rows = (tmp_path / "by_hour.csv").read_text().splitlines()
    assert rows[0] == "hour,group,model,predictor,nmae,nrmse,n"
    assert len(rows) == 1 + 5 * 13


def test_emit_report_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoFailure):
        emit_report(small_report(), blocker / "sub", ["csv"])
