"""Hourly-similarity (HS) forecasting: one MMFF per target hour.

Rows are keyed by the hour being forecast. Targets 8..19 each get their own
MMFF trained on that hour's rows only; the 7am target (whose 6am input is
outside the day window) uses one-day-ahead persistence of cloudiness.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Sequence

import numpy as np

from . import solar
from .errors import MissingContext, OutOfWindow, SlotTooSmall, TooFewSamples
from .features import FeatureDataset, Scaler, apply_standardizer, fit_standardizer, record_features
from .ingest import DAY_END_HOUR, DAY_START_HOUR, SolarRecord, SolarSeries
from .learners import POOL, LearnerSpec, derive_seed
from .mmff import MmffModel, mmff_predict, train_mmff
from .parallel import parallel_map
from .solar import SiteConfig

PERSISTENCE_SLOT = DAY_START_HOUR
MMFF_SLOTS = tuple(range(DAY_START_HOUR + 1, DAY_END_HOUR + 1))
PERSISTENCE_1DA = "1DA-persistence"
PERSISTENCE_1HA = "1HA-persistence"
HOUR = timedelta(hours=1)
DAY = timedelta(days=1)


@dataclass(frozen=True)
class SlotReport:
    slot: int
    winner: str
    cv_nmae: float | None = None
    cv_nrmse: float | None = None


@dataclass(frozen=True)
class HsForecastSystem:
    per_slot: dict[int, MmffModel]
    scaler: Scaler
    site: SiteConfig
    ghi_only: bool = False
    report: tuple[SlotReport, ...] = ()

    def predictor_label(self, hour: int, blender: str | None = None) -> str:
        if hour == PERSISTENCE_SLOT:
            return PERSISTENCE_1DA
        return blender or self.per_slot[hour].blender_name

    def predict_rows(self, X_raw: np.ndarray, target_hours: np.ndarray,
                     blender: str | None = None) -> np.ndarray:
        """MMFF forecasts for rows targeting hours 8..19, dispatched by target hour."""
        X = self.scaler.transform(X_raw)
        out = np.empty(len(target_hours))
        for h in np.unique(target_hours):
            if h not in self.per_slot:
                raise OutOfWindow(f"no MMFF for target hour {h}")
            sel = target_hours == h
            out[sel] = mmff_predict(self.per_slot[int(h)], X[sel], blender)
        return out


@dataclass(frozen=True)
class AllInOneModel:
    label: str
    mmff: MmffModel | None  # None for the 1HA persistence baseline
    scaler: Scaler | None = None

    @property
    def is_persistence(self) -> bool:
        return self.mmff is None

    def predict_rows(self, X_raw: np.ndarray) -> np.ndarray:
        if self.mmff is None:
            raise TypeError("persistence baseline forecasts from records, not feature rows")
        return mmff_predict(self.mmff, self.scaler.transform(X_raw), self.label)


def partition_by_hour(dataset: FeatureDataset) -> dict[int, FeatureDataset]:
    """Split rows by target hour; every MMFF slot key is present, possibly empty."""
    hours = dataset.target_hours
    keys = sorted(set(MMFF_SLOTS) | set(int(h) for h in hours))
    return {h: dataset.take(hours == h) for h in keys}


def _train_slot(task):
    hour, subset, pool, candidates, k_folds, seed = task
    return hour, train_mmff(subset, pool, k_folds, derive_seed(seed, "slot", hour), candidates)


def train_hs(train: FeatureDataset, pool: Sequence[LearnerSpec] = POOL, k_folds: int = 10,
             seed: int = 0, candidates: Sequence[LearnerSpec] | None = None, site: SiteConfig = solar.NREL_GOLDEN,
             jobs: int = 1) -> HsForecastSystem:
    """Train one MMFF per target hour 8..19 on raw (unscaled) training rows."""
    if train.standardized:
        raise ValueError("pass the raw training rows; the system fits its own scaler")
    scaler = fit_standardizer(train)
    parts = partition_by_hour(apply_standardizer(scaler, train))
    for h in MMFF_SLOTS:
        if len(parts[h]) < 2 * k_folds:
            raise SlotTooSmall(h, len(parts[h]), 2 * k_folds)
    tasks = [(h, parts[h], tuple(pool), candidates, k_folds, seed) for h in MMFF_SLOTS]
    per_slot = dict(parallel_map(_train_slot, tasks, jobs))
    report = [SlotReport(PERSISTENCE_SLOT, PERSISTENCE_1DA)]
    for h in MMFF_SLOTS:
        m = per_slot[h]
        nmae, nrmse = m.cv_scores.get(m.blender_name, (None, None))
        report.append(SlotReport(h, m.blender_name, nmae, nrmse))
    ghi_only = len(train.columns) == 3
    return HsForecastSystem(per_slot, scaler, site, ghi_only, tuple(report))


def train_all_in_one_group(train: FeatureDataset, blender_specs: Sequence[LearnerSpec] = POOL,
                           pool: Sequence[LearnerSpec] = POOL, k_folds: int = 10, seed: int = 0,
                           jobs: int = 1) -> dict[str, AllInOneModel]:
    """All-in-one MMFFs for several fixed blenders over one shared first layer,
    plus the 1HA persistence baseline under the key ``"P"``."""
    if len(train) < k_folds:
        raise TooFewSamples(f"{len(train)} rows cannot be split into {k_folds} folds")
    scaler = fit_standardizer(train)
    mmff = train_mmff(apply_standardizer(scaler, train), pool, k_folds, derive_seed(seed, "all-in-one"),
                      candidates=blender_specs, select=False, jobs=jobs)
    models = {s.name: AllInOneModel(s.name, mmff, scaler) for s in blender_specs}
    models["P"] = AllInOneModel("P", None)
    return models


def train_all_in_one(train: FeatureDataset, blender_spec: LearnerSpec, k_folds: int = 10,
                     seed: int = 0, pool: Sequence[LearnerSpec] = POOL) -> AllInOneModel:
    return train_all_in_one_group(train, [blender_spec], pool, k_folds, seed)[blender_spec.name]


def csi_of(rec: SolarRecord) -> float:
    return solar.clear_sky_index(rec.ghi, rec.ghi_clr)


def forecast_1da(context: SolarSeries, target_time: datetime) -> float:
    """7am forecast: previous-day 7am clear-sky index times today's 7am clear-sky GHI."""
    prev = context.get(target_time - DAY)
    if prev is None:
        raise MissingContext(f"no record at {(target_time - DAY).isoformat()} for 1DA persistence")
    today = context.get(target_time)
    ghi_clr = today.ghi_clr if today is not None else solar.clear_sky(target_time, context.site).ghi_clr
    return solar.persistence_1da(csi_of(prev), ghi_clr)


def forecast_1ha(context: SolarSeries, issue_time: datetime) -> float:
    rec = context.get(issue_time)
    if rec is None:
        raise MissingContext(f"no record at issue time {issue_time.isoformat()}")
    target = issue_time + HOUR
    nxt = context.get(target)
    ghi_clr = nxt.ghi_clr if nxt is not None else solar.clear_sky(target, context.site).ghi_clr
    return solar.persistence_1ha(csi_of(rec), ghi_clr)


def forecast(system: HsForecastSystem, context: SolarSeries, issue_time: datetime,
             blender: str | None = None) -> tuple[datetime, float]:
    """Forecast GHI one hour after ``issue_time``; returns (target time, W/m2)."""
    target = issue_time + HOUR
    if not DAY_START_HOUR <= target.hour <= DAY_END_HOUR or target.date() != issue_time.date():
        raise OutOfWindow(f"target {target.isoformat()} is outside the {DAY_START_HOUR}-{DAY_END_HOUR}h window")
    if target.hour == PERSISTENCE_SLOT:
        return target, max(0.0, forecast_1da(context, target))
    rec = context.get(issue_time)
    if rec is None:
        raise MissingContext(f"no record at issue time {issue_time.isoformat()}")
    x = np.array([record_features(rec, system.ghi_only)])
    value = system.predict_rows(x, np.array([target.hour]), blender)[0]
    return target, max(0.0, float(value))
