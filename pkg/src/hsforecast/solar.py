"""Solar geometry, Haurwitz clear-sky irradiance and persistence-of-cloudiness baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .errors import InvalidConfig, MissingLag

CSI_MAX = 1.5
CLEAR_SKY_GUARD = 10.0  # W/m2; below this the clear-sky index is set to 0


@dataclass(frozen=True)
class SiteConfig:
    latitude: float
    longitude: float  # degrees east
    elevation: float = 0.0
    utc_offset: float = 0.0  # hours, local standard time

    def __post_init__(self):
        if not abs(self.latitude) <= 90:
            raise InvalidConfig(f"latitude out of range: {self.latitude}")
        if not abs(self.longitude) <= 180:
            raise InvalidConfig(f"longitude out of range: {self.longitude}")

    @property
    def tz(self) -> timezone:
        return timezone(timedelta(hours=self.utc_offset))

    @classmethod
    def parse(cls, text: str) -> "SiteConfig":
        """Parse ``lat,lon,elev,utc``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise InvalidConfig(f"site must be lat,lon,elev,utc; got {text!r}")
        try:
            lat, lon, elev, utc = (float(p) for p in parts)
        except ValueError as exc:
            raise InvalidConfig(f"bad site {text!r}: {exc}") from None
        return cls(lat, lon, elev, utc)

    def format(self) -> str:
        return f"{self.latitude:g},{self.longitude:g},{self.elevation:g},{self.utc_offset:g}"


# NREL Solar Radiation Research Laboratory, Golden, Colorado
NREL_GOLDEN = SiteConfig(39.74, -105.18, 1828.8, -7.0)


@dataclass(frozen=True)
class ClearSkyValue:
    ghi_clr: float
    zenith: float


def _as_utc(timestamp: datetime, site: SiteConfig) -> datetime:
    if timestamp.tzinfo is None:
        timestamp = timestamp.replace(tzinfo=site.tz)
    return timestamp.astimezone(timezone.utc)


def solar_zenith(timestamp: datetime, site: SiteConfig) -> float:
    """Solar zenith angle in degrees (NOAA low-precision approximation).

    Naive timestamps are interpreted as local standard time at ``site``.
    """
    t = _as_utc(timestamp, site)
    doy = t.timetuple().tm_yday
    hour = t.hour + t.minute / 60.0 + t.second / 3600.0
    year_days = 366 if _is_leap(t.year) else 365
    g = 2.0 * math.pi / year_days * (doy - 1 + (hour - 12.0) / 24.0)

    decl = (0.006918 - 0.399912 * math.cos(g) + 0.070257 * math.sin(g)
            - 0.006758 * math.cos(2 * g) + 0.000907 * math.sin(2 * g)
            - 0.002697 * math.cos(3 * g) + 0.00148 * math.sin(3 * g))
    eqtime = 229.18 * (0.000075 + 0.001868 * math.cos(g) - 0.032077 * math.sin(g)
                       - 0.014615 * math.cos(2 * g) - 0.040849 * math.sin(2 * g))

    true_solar_minutes = hour * 60.0 + eqtime + 4.0 * site.longitude
    hour_angle = math.radians(true_solar_minutes / 4.0 - 180.0)
    lat = math.radians(site.latitude)
    cos_z = (math.sin(lat) * math.sin(decl)
             + math.cos(lat) * math.cos(decl) * math.cos(hour_angle))
    return math.degrees(math.acos(min(1.0, max(-1.0, cos_z))))


def _is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def clear_sky_ghi(zenith: float) -> float:
    """Haurwitz clear-sky GHI in W/m2."""
    cz = math.cos(math.radians(zenith))
    if zenith >= 90.0 or cz <= 0.0:
        return 0.0
    return 1098.0 * cz * math.exp(-0.057 / cz)


def clear_sky(timestamp: datetime, site: SiteConfig) -> ClearSkyValue:
    z = solar_zenith(timestamp, site)
    return ClearSkyValue(clear_sky_ghi(z), z)


def clear_sky_index(ghi: float, ghi_clr: float) -> float:
    if ghi_clr < CLEAR_SKY_GUARD:
        return 0.0
    return min(CSI_MAX, max(0.0, ghi / ghi_clr))


def persistence_1ha(csi_now: float, ghi_clr_next: float) -> float:
    """One-hour-ahead persistence of cloudiness."""
    return csi_now * ghi_clr_next


def persistence_1da(csi_same_hour_prev_day: float | None, ghi_clr_now: float) -> float:
    """One-day-ahead persistence of cloudiness; ``None`` means the lag record is missing."""
    if csi_same_hour_prev_day is None:
        raise MissingLag("no record at the same hour on the previous day")
    return csi_same_hour_prev_day * ghi_clr_now
