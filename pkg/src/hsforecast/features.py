"""Sky-image statistics, supervised feature assembly, standardization and
time-series characterization."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from typing import IO, Sequence

import numpy as np

from .errors import EmptyHistogram, EmptyInput, InvalidAlpha, MalformedRow, TooShort
from .ingest import DAY_END_HOUR, DAY_START_HOUR, SolarSeries

FEATURES = ("ghi", "ghi_clr", "csi", "mu", "sigma", "entropy")
GHI_ONLY_FEATURES = ("ghi", "ghi_clr", "csi")
HOUR = timedelta(hours=1)


@dataclass(frozen=True)
class SkyStats:
    mu: float
    sigma: float
    entropy: float


def sky_stats_from_histogram(hist: Sequence[float], alpha: float = 2.0,
                             value_range: tuple[float, float] = (0.0, 1.0)) -> SkyStats:
    """Mean, std and Renyi entropy (nats) of an nRBR histogram.

    Bins split ``value_range`` evenly; moments use bin centers.
    """
    counts = np.asarray(hist, dtype=float)
    if alpha <= 0 or alpha == 1:
        raise InvalidAlpha(f"Renyi order must be > 0 and != 1, got {alpha}")
    if counts.ndim != 1 or counts.size == 0 or np.any(counts < 0) or counts.sum() <= 0:
        raise EmptyHistogram("histogram needs non-negative counts with positive total")
    p = counts / counts.sum()
    lo, hi = value_range
    width = (hi - lo) / counts.size
    centers = lo + width * (np.arange(counts.size) + 0.5)
    mu = float(p @ centers)
    sigma = float(math.sqrt(max(0.0, p @ (centers - mu) ** 2)))
    entropy = math.log(float(np.sum(p[p > 0] ** alpha))) / (1.0 - alpha)
    return SkyStats(mu, sigma, max(0.0, entropy))


def parse_histogram_csv(source: IO[str] | str, alpha: float = 2.0) -> list[tuple[datetime, SkyStats]]:
    """Read ``timestamp,bin_0,...,bin_{n-1}`` rows into sky statistics."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None:
        raise EmptyInput("no header row")
    out = []
    for row_no, row in enumerate(reader, start=1):
        try:
            ts = datetime.fromisoformat(row[0].strip())
            counts = [float(c) for c in row[1:]]
        except (ValueError, IndexError) as exc:
            raise MalformedRow(row_no, str(exc)) from None
        try:
            out.append((ts, sky_stats_from_histogram(counts, alpha)))
        except EmptyHistogram as exc:
            raise MalformedRow(row_no, str(exc)) from None
    return out


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.scale + self.mean


def fit_scaler(X: np.ndarray) -> Scaler:
    """Column standardizer; zero-variance columns pass through unchanged."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInput("cannot fit a standardizer on an empty matrix")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # float noise makes the std of a constant column tiny but nonzero
    const = ~(std > 1e-12 * np.maximum(1.0, np.abs(mean)))
    mean = np.where(const, 0.0, mean)
    std = np.where(const, 1.0, std)
    return Scaler(mean, std)


@dataclass(frozen=True)
class FeatureRow:
    x: np.ndarray
    y: float
    issue_timestamp: datetime


@dataclass(frozen=True)
class FeatureDataset:
    """Supervised pairs ``x_t -> GHI(t + 1h)`` stored column-wise."""

    X: np.ndarray
    y: np.ndarray
    issue_times: tuple[datetime, ...]
    columns: tuple[str, ...] = FEATURES
    scaler: Scaler | None = None

    def __len__(self) -> int:
        return len(self.y)

    @property
    def standardized(self) -> bool:
        return self.scaler is not None

    @property
    def target_times(self) -> list[datetime]:
        return [t + HOUR for t in self.issue_times]

    @property
    def target_hours(self) -> np.ndarray:
        return np.array([(t + HOUR).hour for t in self.issue_times], dtype=int)

    def row(self, i: int) -> FeatureRow:
        return FeatureRow(self.X[i], float(self.y[i]), self.issue_times[i])

    @property
    def rows(self) -> list[FeatureRow]:
        return [self.row(i) for i in range(len(self))]

    def take(self, idx) -> "FeatureDataset":
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return replace(self, X=self.X[idx], y=self.y[idx],
                       issue_times=tuple(self.issue_times[i] for i in idx))


def record_features(rec, ghi_only: bool = False) -> list[float]:
    x = [rec.ghi, rec.ghi_clr, rec.csi]
    if not ghi_only:
        x += [rec.mu, rec.sigma, rec.entropy]
    return x


def build_supervised(series: SolarSeries, ghi_only: bool = False,
                     start_hour: int = DAY_START_HOUR, end_hour: int = DAY_END_HOUR) -> FeatureDataset:
    """Pair each in-window record with the record one hour later on the same day."""
    X, y, times = [], [], []
    recs = series.records
    for cur, nxt in zip(recs, recs[1:]):
        t = cur.timestamp
        if (nxt.timestamp == t + HOUR and nxt.timestamp.date() == t.date()
                and start_hour <= t.hour and nxt.timestamp.hour <= end_hour):
            X.append(record_features(cur, ghi_only))
            y.append(nxt.ghi)
            times.append(t)
    columns = GHI_ONLY_FEATURES if ghi_only else FEATURES
    return FeatureDataset(np.array(X, dtype=float).reshape(len(y), len(columns)),
                          np.array(y, dtype=float), tuple(times), columns)


def fit_standardizer(train: FeatureDataset) -> Scaler:
    if len(train) == 0:
        raise EmptyInput("cannot fit a standardizer on an empty dataset")
    return fit_scaler(train.X)


def apply_standardizer(scaler: Scaler, dataset: FeatureDataset) -> FeatureDataset:
    """Scale the inputs of ``dataset``; the target is left in W/m2."""
    if dataset.standardized:
        raise ValueError("dataset is already standardized")
    return replace(dataset, X=scaler.transform(dataset.X), scaler=scaler)


def invert_standardizer(dataset: FeatureDataset) -> FeatureDataset:
    if dataset.scaler is None:
        return dataset
    return replace(dataset, X=dataset.scaler.inverse(dataset.X), scaler=None)


@dataclass(frozen=True)
class TsCharacteristics:
    periodicity: int
    trend: float
    seasonality: float


def autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    x = np.asarray(x, dtype=float) - np.mean(x)
    denom = float(x @ x)
    if denom == 0:
        return np.zeros(max_lag + 1)
    return np.array([float(x[: x.size - k] @ x[k:]) / denom for k in range(max_lag + 1)])


def detect_period(x: np.ndarray, threshold: float = 0.3) -> int:
    """Lag of the highest ACF local maximum in ``[2, n/3]`` above ``threshold``, else 0."""
    max_lag = x.size // 3
    acf = autocorrelation(x, max_lag + 1)
    best, best_val = 0, threshold
    for k in range(2, max_lag + 1):
        if acf[k] > acf[k - 1] and acf[k] >= acf[k + 1] and acf[k] > best_val:
            best, best_val = k, acf[k]
    return best


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average (2xm for even windows); NaN where undefined."""
    n = x.size
    out = np.full(n, np.nan)
    if window <= 1:
        return x.astype(float).copy()
    if window % 2:
        weights = np.full(window, 1.0 / window)
    else:
        weights = np.full(window + 1, 1.0 / window)
        weights[0] = weights[-1] = 0.5 / window
    half = weights.size // 2
    if n >= weights.size:
        out[half: n - half] = np.convolve(x, weights, mode="valid")
    return out


def decompose(x: np.ndarray, period: int, trend_window: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classical additive decomposition into (trend, seasonal, remainder).

    With ``period == 0`` the seasonal component is identically zero.
    """
    x = np.asarray(x, dtype=float)
    trend = moving_average(x, trend_window)
    detrended = x - trend
    seasonal = np.zeros_like(x)
    if period > 1:
        phase = np.arange(x.size) % period
        means = np.array([np.nanmean(detrended[phase == j]) for j in range(period)])
        means -= means.mean()
        seasonal = means[phase]
    remainder = x - trend - seasonal
    return trend, seasonal, remainder


def _strength(remainder: np.ndarray, component_plus_remainder: np.ndarray) -> float:
    var_cr = float(np.var(component_plus_remainder))
    if var_cr == 0:
        return 0.0
    return max(0.0, 1.0 - float(np.var(remainder)) / var_cr)


def characterize(values: Sequence[float], candidate_period: int = 13,
                 acf_threshold: float = 0.3) -> TsCharacteristics:
    x = np.asarray(values, dtype=float)
    if x.size < 3 * candidate_period:
        raise TooShort(f"need at least {3 * candidate_period} values, got {x.size}")
    period = detect_period(x, acf_threshold)
    trend, seasonal, remainder = decompose(x, period, period or candidate_period)
    ok = ~np.isnan(trend)
    r = remainder[ok]
    return TsCharacteristics(
        periodicity=int(period),
        trend=_strength(r, trend[ok] + r),
        seasonality=_strength(r, seasonal[ok] + r) if period else 0.0,
    )
