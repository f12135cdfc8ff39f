"""Hourly solar series: CSV parsing, day-window elimination, monthly split, synthesis."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from functools import cached_property
from typing import IO, Iterable, Mapping

import numpy as np

from . import solar
from .errors import EmptyInput, InvalidConfig, MalformedRow, NonMonotoneTimestamps
from .solar import SiteConfig

DAY_START_HOUR = 7
DAY_END_HOUR = 19
SKY_FIELDS = ("mu", "sigma", "entropy")
CSV_COLUMNS = ("timestamp", "ghi", "ghi_clr", "mu", "sigma", "entropy")


@dataclass(frozen=True)
class SolarRecord:
    timestamp: datetime
    ghi: float
    ghi_clr: float | None = None
    mu: float | None = None
    sigma: float | None = None
    entropy: float | None = None

    @property
    def has_sky(self) -> bool:
        return self.mu is not None and self.sigma is not None and self.entropy is not None

    @property
    def csi(self) -> float:
        return solar.clear_sky_index(self.ghi, self.ghi_clr)


def check_record(rec: SolarRecord, require_sky: bool = True) -> str | None:
    """Return a reason string if ``rec`` violates the record invariants."""
    ts = rec.timestamp
    if ts.minute or ts.second or ts.microsecond:
        return f"timestamp {ts.isoformat()} is not on the hour"
    for name in ("ghi", "ghi_clr", "mu", "sigma", "entropy"):
        v = getattr(rec, name)
        if v is not None and not math.isfinite(v):
            return f"{name} is not finite"
    if rec.ghi < 0:
        return f"ghi < 0 ({rec.ghi})"
    if rec.ghi_clr is not None and rec.ghi_clr < 0:
        return f"ghi_clr < 0 ({rec.ghi_clr})"
    if rec.mu is not None and not 0.0 <= rec.mu <= 1.0:
        return f"mu outside [0, 1] ({rec.mu})"
    if rec.sigma is not None and rec.sigma < 0:
        return f"sigma < 0 ({rec.sigma})"
    if rec.entropy is not None and rec.entropy < 0:
        return f"entropy < 0 ({rec.entropy})"
    if require_sky and not rec.has_sky:
        return "missing sky statistics (mu, sigma, entropy); use ghi-only mode"
    return None


@dataclass(frozen=True)
class SolarSeries:
    site: SiteConfig
    records: tuple[SolarRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for a, b in zip(self.records, self.records[1:]):
            if not a.timestamp < b.timestamp:
                raise NonMonotoneTimestamps(
                    f"{b.timestamp.isoformat()} does not follow {a.timestamp.isoformat()}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @cached_property
    def index(self) -> dict[datetime, int]:
        return {r.timestamp: i for i, r in enumerate(self.records)}

    def get(self, timestamp: datetime) -> SolarRecord | None:
        i = self.index.get(timestamp)
        return None if i is None else self.records[i]

    @property
    def timestamps(self) -> list[datetime]:
        return [r.timestamp for r in self.records]

    def column(self, name: str) -> np.ndarray:
        if name == "csi":
            return np.array([r.csi for r in self.records], dtype=float)
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def subset(self, keep: Iterable[bool]) -> "SolarSeries":
        return SolarSeries(self.site, tuple(r for r, k in zip(self.records, keep) if k))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0
    by_day: bool = False  # assign whole days instead of single samples

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidConfig(f"train_fraction must be in (0, 1), got {self.train_fraction}")


# Hour -> (mean, innovation std, persistence). Persistence links hour h to h-1;
# for 7am it links to 7am of the previous day.
DEFAULT_CSI_REGIMES: dict[int, tuple[float, float, float]] = {
    7: (0.80, 0.15, 0.50),
    8: (0.86, 0.06, 0.92),
    9: (0.88, 0.06, 0.92),
    10: (0.84, 0.08, 0.88),
    11: (0.76, 0.12, 0.75),
    12: (0.66, 0.15, 0.55),
    13: (0.56, 0.18, 0.40),
    14: (0.50, 0.20, 0.30),
    15: (0.50, 0.20, 0.35),
    16: (0.56, 0.17, 0.50),
    17: (0.64, 0.14, 0.65),
    18: (0.72, 0.10, 0.80),
    19: (0.76, 0.08, 0.85),
}

DEFAULT_SKY_COUPLING: dict[str, float] = {
    "mu_clear": 0.30, "mu_slope": 0.45, "mu_noise": 0.04,
    "sigma_base": 0.04, "sigma_slope": 0.12, "sigma_noise": 0.015,
    "h_base": 1.2, "h_slope": 2.0, "h_noise": 0.15,
}


@dataclass(frozen=True)
class SynthConfig:
    n_days: int = 365
    start_date: date = date(2023, 1, 1)
    site: SiteConfig = solar.NREL_GOLDEN
    csi_regime_params: Mapping[int, tuple[float, float, float]] = field(
        default_factory=lambda: dict(DEFAULT_CSI_REGIMES))
    sky_coupling: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_SKY_COUPLING))
    seed: int = 0

    def validate(self) -> None:
        if self.n_days < 1:
            raise InvalidConfig("n_days must be >= 1")
        hours = set(range(DAY_START_HOUR, DAY_END_HOUR + 1))
        if set(self.csi_regime_params) != hours:
            raise InvalidConfig("csi_regime_params needs one entry per hour 7..19")
        for h, (mean, std, phi) in self.csi_regime_params.items():
            if not 0.0 <= phi < 1.0:
                raise InvalidConfig(f"hour {h}: persistence must be in [0, 1)")
            if std < 0:
                raise InvalidConfig(f"hour {h}: std must be >= 0")
        missing = set(DEFAULT_SKY_COUPLING) - set(self.sky_coupling)
        if missing:
            raise InvalidConfig(f"sky_coupling missing keys: {sorted(missing)}")


def _parse_float(text: str | None, name: str, row: int) -> float | None:
    if text is None or text.strip() == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise MalformedRow(row, f"{name} is not a number: {text!r}") from None


def parse_csv(source: IO | str | bytes, site: SiteConfig,
              schema: Mapping[str, str] | None = None, ghi_only: bool = False) -> SolarSeries:
    """Parse an hourly CSV into a validated series.

    ``schema`` maps canonical column names (``timestamp``, ``ghi``, ...) to
    the header names used in the file. Data rows are numbered from 1. Missing
    ``ghi_clr`` values are filled from the Haurwitz model at ``site``.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)
    elif isinstance(source, (io.BufferedIOBase, io.RawIOBase)) or "b" in getattr(source, "mode", ""):
        source = io.TextIOWrapper(source, encoding="utf-8")
    schema = dict(schema or {})
    reader = csv.DictReader(source)
    if not reader.fieldnames:
        raise EmptyInput("no header row")
    cols = {name: schema.get(name, name) for name in CSV_COLUMNS}
    for required in ("timestamp", "ghi"):
        if cols[required] not in reader.fieldnames:
            raise EmptyInput(f"missing required column {cols[required]!r}")

    records = []
    for row_no, row in enumerate(reader, start=1):
        raw_ts = (row.get(cols["timestamp"]) or "").strip()
        try:
            ts = datetime.fromisoformat(raw_ts)
        except ValueError:
            raise MalformedRow(row_no, f"unparseable timestamp {raw_ts!r}") from None
        ts = ts.replace(tzinfo=site.tz) if ts.tzinfo is None else ts.astimezone(site.tz)
        values = {name: _parse_float(row.get(cols[name]), name, row_no)
                  for name in CSV_COLUMNS[1:]}
        if values["ghi"] is None:
            raise MalformedRow(row_no, "ghi missing")
        if values["ghi_clr"] is None:
            values["ghi_clr"] = solar.clear_sky(ts, site).ghi_clr
        rec = SolarRecord(ts, **values)
        reason = check_record(rec, require_sky=not ghi_only)
        if reason:
            raise MalformedRow(row_no, reason)
        records.append(rec)
    if not records:
        raise EmptyInput("no data rows")
    return SolarSeries(site, tuple(records))


def _fmt(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def write_csv(series: SolarSeries, dest: IO[str]) -> None:
    """Write ``series`` in the canonical input schema (floats round-trip exactly)."""
    dest.write(",".join(CSV_COLUMNS) + "\n")
    for r in series.records:
        dest.write(",".join([r.timestamp.isoformat(), _fmt(r.ghi), _fmt(r.ghi_clr),
                             _fmt(r.mu), _fmt(r.sigma), _fmt(r.entropy)]) + "\n")


def apply_day_window(series: SolarSeries, start_hour: int = DAY_START_HOUR,
                     end_hour: int = DAY_END_HOUR) -> SolarSeries:
    return series.subset(start_hour <= r.timestamp.hour <= end_hour for r in series.records)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _month_seed(seed: int, year: int, month: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(year, month)))


def stratified_split(series: SolarSeries, spec: SplitSpec) -> tuple[SolarSeries, SolarSeries]:
    """Random per-calendar-month split with ``round_half_up(fraction * n)`` training units.

    Units are single records, or whole days when ``spec.by_day`` is set.
    """
    if len(series) == 0:
        raise EmptyInput("cannot split an empty series")
    months: dict[tuple[int, int], list[int]] = {}
    for i, r in enumerate(series.records):
        months.setdefault((r.timestamp.year, r.timestamp.month), []).append(i)

    in_train = np.zeros(len(series), dtype=bool)
    for (year, month), idx in months.items():
        rng = _month_seed(spec.seed, year, month)
        if spec.by_day:
            days: dict[date, list[int]] = {}
            for i in idx:
                days.setdefault(series.records[i].timestamp.date(), []).append(i)
            units = list(days.values())
        else:
            units = [[i] for i in idx]
        n_train = _round_half_up(spec.train_fraction * len(units))
        for u in rng.permutation(len(units))[:n_train]:
            in_train[units[u]] = True
    return series.subset(in_train), series.subset(~in_train)


def generate_synthetic(config: SynthConfig) -> SolarSeries:
    """Synthetic windowed series with per-hour AR(1) clear-sky-index regimes."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    site = config.site
    regimes = config.csi_regime_params
    k = config.sky_coupling
    hours = range(DAY_START_HOUR, DAY_END_HOUR + 1)

    records = []
    prev_day_first = regimes[DAY_START_HOUR][0]
    for d in range(config.n_days):
        day = config.start_date + timedelta(days=d)
        prev = None
        for h in hours:
            mean, std, phi = regimes[h]
            if prev is None:
                anchor_mean, anchor = mean, prev_day_first
            else:
                anchor_mean, anchor = regimes[h - 1][0], prev
            csi = mean + phi * (anchor - anchor_mean) + std * rng.standard_normal()
            csi = min(solar.CSI_MAX, max(0.0, csi))
            if prev is None:
                prev_day_first = csi
            prev = csi

            ts = datetime(day.year, day.month, day.day, h, tzinfo=site.tz)
            ghi_clr = solar.clear_sky(ts, site).ghi_clr
            noise = rng.standard_normal(3)
            cloud = 1.0 - min(csi, 1.0)
            mu = k["mu_clear"] + k["mu_slope"] * cloud + k["mu_noise"] * noise[0]
            sigma = (k["sigma_base"] + k["sigma_slope"] * 4.0 * cloud * (1.0 - cloud)
                     + k["sigma_noise"] * noise[1])
            ent = k["h_base"] + k["h_slope"] * 4.0 * cloud * (1.0 - cloud) + k["h_noise"] * noise[2]
            records.append(SolarRecord(
                timestamp=ts,
                ghi=csi * ghi_clr,
                ghi_clr=ghi_clr,
                mu=min(1.0, max(0.0, mu)),
                sigma=max(0.0, sigma),
                entropy=max(0.0, ent),
            ))
    return SolarSeries(site, tuple(records))

