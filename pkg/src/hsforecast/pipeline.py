"""End-to-end glue: prepare data, train both model groups, evaluate on the test split."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from . import serialize, solar
from .errors import DataError, IoFailure
from .evaluation import AIO_GROUP, C_OPT, HS_GROUP, EvalReport, ModelKey, build_report
from .features import FeatureDataset, build_supervised, record_features
from .hs import (DAY, HOUR, PERSISTENCE_1DA, PERSISTENCE_1HA, PERSISTENCE_SLOT, AllInOneModel,
                 HsForecastSystem, csi_of, train_all_in_one_group, train_hs)
from .ingest import DAY_END_HOUR, DAY_START_HOUR, SolarSeries, SplitSpec, apply_day_window, stratified_split
from .learners import POOL, LearnerSpec

HS_FILE = "hs_system.pkl"
AIO_FILE = "all_in_one.pkl"
RUN_FILE = "run.pkl"
TRAINING_REPORT = "training_report.csv"


@dataclass(frozen=True)
class Prepared:
    series: SolarSeries  # windowed
    dataset: FeatureDataset  # every supervised pair in the series
    train_targets: frozenset[datetime]
    test_targets: tuple[datetime, ...]

    @property
    def train_rows(self) -> FeatureDataset:
        mask = np.array([t in self.train_targets for t in self.dataset.target_times], dtype=bool)
        return self.dataset.take(mask)


@dataclass(frozen=True)
class TrainedRun:
    hs: HsForecastSystem
    all_in_one: dict[str, AllInOneModel]
    test_targets: tuple[datetime, ...]
    split: SplitSpec
    k_folds: int
    seed: int
    blender_names: tuple[str, ...] = field(default_factory=lambda: tuple(s.name for s in POOL))


def prepare(series: SolarSeries, split: SplitSpec, ghi_only: bool = False) -> Prepared:
    """Window and split the series; a row belongs to the split holding its target record."""
    windowed = apply_day_window(series)
    train, test = stratified_split(windowed, split)
    dataset = build_supervised(windowed, ghi_only)
    return Prepared(windowed, dataset, frozenset(train.timestamps), tuple(test.timestamps))


def train_run(series: SolarSeries, split: SplitSpec, seed: int, k_folds: int = 10,
              ghi_only: bool = False, pool: Sequence[LearnerSpec] = POOL, jobs: int = 1) -> TrainedRun:
    prep = prepare(series, split, ghi_only)
    rows = prep.train_rows
    hs = train_hs(rows, pool, k_folds, seed, site=series.site, jobs=jobs)
    aio = train_all_in_one_group(rows, pool, pool, k_folds, seed, jobs)
    return TrainedRun(hs, aio, prep.test_targets, split, k_folds, seed, tuple(s.name for s in pool))


def training_report_csv(system: HsForecastSystem) -> str:
    lines = ["slot,winner,cv_nmae,cv_nrmse"]
    for r in system.report:
        nmae = "N/A" if r.cv_nmae is None else f"{r.cv_nmae:.2f}"
        nrmse = "N/A" if r.cv_nrmse is None else f"{r.cv_nrmse:.2f}"
        lines.append(f"{r.slot},{r.winner},{nmae},{nrmse}")
    return "\n".join(lines) + "\n"


def save_run(run: TrainedRun, model_dir: str | Path) -> list[Path]:
    d = Path(model_dir)
    paths = [serialize.save(run.hs, d / HS_FILE, "hs-system"),
             serialize.save(run.all_in_one, d / AIO_FILE, "all-in-one"),
             serialize.save(replace(run, hs=None, all_in_one=None), d / RUN_FILE, "run")]
    try:
        (d / TRAINING_REPORT).write_text(training_report_csv(run.hs), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {d / TRAINING_REPORT}: {exc}") from exc
    return paths + [d / TRAINING_REPORT]


def load_run(model_dir: str | Path) -> TrainedRun:
    d = Path(model_dir)
    meta = serialize.load(d / RUN_FILE, "run")
    return replace(meta, hs=serialize.load(d / HS_FILE, "hs-system"),
                   all_in_one=serialize.load(d / AIO_FILE, "all-in-one"))


@dataclass(frozen=True)
class EvalSet:
    target_times: tuple[datetime, ...]
    y: np.ndarray
    X_raw: np.ndarray  # issue-record features for rows targeting 8..19
    row_target_hours: np.ndarray
    mmff_mask: np.ndarray  # True where the target is served by an MMFF
    persistence_1da: np.ndarray  # 7am forecasts (NaN elsewhere)
    persistence_1ha: np.ndarray  # 1HA forecasts (NaN at 7am)


def build_eval_set(series: SolarSeries, test_targets: Sequence[datetime], ghi_only: bool) -> EvalSet:
    """Test targets in the day window that have the inputs every model needs.

    7am targets need the previous day's 7am record; later targets need the
    record one hour before. Targets lacking them are skipped for all models.
    """
    windowed = apply_day_window(series)
    times, y, X, hours, p1da, p1ha = [], [], [], [], [], []
    for t in sorted(test_targets):
        rec = windowed.get(t)
        if rec is None or not DAY_START_HOUR <= t.hour <= DAY_END_HOUR:
            continue
        if t.hour == PERSISTENCE_SLOT:
            prev = windowed.get(t - DAY)
            if prev is None:
                continue
            p1da.append(solar.persistence_1da(csi_of(prev), rec.ghi_clr))
            p1ha.append(np.nan)
            X.append(None)
        else:
            issue = windowed.get(t - HOUR)
            if issue is None:
                continue
            p1da.append(np.nan)
            p1ha.append(solar.persistence_1ha(csi_of(issue), rec.ghi_clr))
            X.append(issue)
        times.append(t)
        y.append(rec.ghi)
        hours.append(t.hour)
    if not times:
        raise DataError("no test targets with usable inputs")
    mask = np.array([x is not None for x in X], dtype=bool)
    d = 3 if ghi_only else 6
    Xm = np.array([record_features(r, ghi_only) for r in X if r is not None], dtype=float).reshape(-1, d)
    hours = np.array(hours, dtype=int)
    return EvalSet(tuple(times), np.array(y, dtype=float), Xm, hours[mask], mask,
                   np.array(p1da), np.array(p1ha))


def _combine(es: EvalSet, mmff_values: np.ndarray | None, fallback: np.ndarray) -> np.ndarray:
    out = es.persistence_1da.copy()
    out[es.mmff_mask] = fallback[es.mmff_mask] if mmff_values is None else mmff_values
    return np.maximum(out, 0.0)


def model_forecasts(run: TrainedRun, es: EvalSet) -> tuple[dict[ModelKey, np.ndarray], dict[ModelKey, dict[int, str]]]:
    """Forecasts of every model on the evaluation set, in report order."""
    hs = run.hs
    forecasts, predictors = {}, {}
    slots = sorted(set(int(t.hour) for t in es.target_times))

    def labels(fn):
        return {h: PERSISTENCE_1DA if h == PERSISTENCE_SLOT else fn(h) for h in slots}

    forecasts[(HS_GROUP, C_OPT)] = _combine(es, hs.predict_rows(es.X_raw, es.row_target_hours), es.persistence_1ha)
    predictors[(HS_GROUP, C_OPT)] = labels(lambda h: hs.predictor_label(h))
    for name in run.blender_names:
        forecasts[(HS_GROUP, name)] = _combine(
            es, hs.predict_rows(es.X_raw, es.row_target_hours, name), es.persistence_1ha)
        predictors[(HS_GROUP, name)] = labels(lambda h, n=name: n)
    for name in run.blender_names:
        forecasts[(AIO_GROUP, name)] = _combine(es, run.all_in_one[name].predict_rows(es.X_raw), es.persistence_1ha)
        predictors[(AIO_GROUP, name)] = labels(lambda h, n=name: n)
    forecasts[(AIO_GROUP, "P")] = _combine(es, None, es.persistence_1ha)
    predictors[(AIO_GROUP, "P")] = labels(lambda h: PERSISTENCE_1HA)
    return forecasts, predictors


def evaluate_run(run: TrainedRun, series: SolarSeries, normalizer: float | None = None) -> EvalReport:
    """Report over the stored test targets; ``normalizer=None`` uses the mean observed GHI."""
    es = build_eval_set(series, run.test_targets, run.hs.ghi_only)
    forecasts, predictors = model_forecasts(run, es)
    return build_report(es.y, forecasts, es.target_times, normalizer, predictors)
