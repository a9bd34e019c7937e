"""Hourly generation/weather ingestion, merging, and synthetic domain generation.

Timestamps are naive UTC datetimes aligned to the hour; sub-hourly rows are
rejected. Generation values are capacity factors in [0, 1].
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import (
    EmptyFileError,
    EmptyIntersectionError,
    MalformedTimestampError,
    MissingColumnError,
    OutOfRangeError,
)

log = logging.getLogger(__name__)

TS_FMT = "%Y-%m-%dT%H:%M"
HOUR = timedelta(hours=1)

# The full weather-parameter set of the hourly meteorological source.
WEATHER_FEATURES = [
    "temp", "feelslike", "dew", "humidity", "precip", "precipprob",
    "preciptype", "snow", "snowdepth", "windgust", "windspeed", "winddir",
    "sealevelpressure", "cloudcover", "visibility", "solarradiation",
    "solarenergy", "uvindex", "severerisk", "conditions", "icon",
]
# Categorical columns carry no numeric signal for the classifier and are dropped.
STRING_FEATURES = {"preciptype", "conditions", "icon"}


@dataclass(frozen=True)
class GenerationSeries:
    country_id: str
    rows: list[tuple[datetime, float]]


@dataclass(frozen=True)
class WeatherSeries:
    location_id: str
    feature_names: list[str]
    rows: list[tuple[datetime, np.ndarray]]  # values may contain NaN (= missing)


@dataclass(frozen=True)
class AlignedSample:
    timestamp: datetime
    features: np.ndarray
    capacity_factor: float


@dataclass(frozen=True)
class ImputePolicy:
    """Forward-fill missing weather values up to max_gap_hours back, else drop the row."""

    max_gap_hours: int = 3


@dataclass(frozen=True)
class SynthConfig:
    n_hours: int
    n_features: int = 18
    shift: float = 0.0
    noise_sd: float = 0.05
    cut_in: float = 3.0
    rated: float = 13.0
    seed: int = 0

    def __post_init__(self):
        if self.n_hours <= 0:
            raise ValueError("n_hours must be positive")
        if self.n_features < 6:
            raise ValueError("n_features must be >= 6")
        if not self.cut_in < self.rated:
            raise ValueError("cut_in must be below rated")
        if self.shift < 0 or self.noise_sd < 0:
            raise ValueError("shift and noise_sd must be >= 0")


def parse_timestamp(raw: str) -> datetime:
    try:
        ts = datetime.strptime(raw.strip(), TS_FMT)
    except ValueError as exc:
        raise MalformedTimestampError(f"bad timestamp {raw!r}: {exc}") from exc
    if ts.minute != 0:
        raise MalformedTimestampError(f"timestamp {raw!r} is not hour-aligned")
    return ts


def _check_strictly_increasing(stamps: list[datetime], what: str) -> None:
    for a, b in zip(stamps, stamps[1:]):
        if b <= a:
            raise MalformedTimestampError(f"{what}: duplicate or non-increasing timestamp {b}")


def parse_generation_csv(path: str | Path, country_id: str) -> GenerationSeries:
    """Read one country's hourly capacity factors from a multi-country CSV."""
    path = Path(path)
    if not path.exists():
        raise EmptyFileError(f"generation file not found: {path}")
    df = pd.read_csv(path, dtype=str)
    if len(df) == 0:
        raise EmptyFileError(f"generation file has no data rows: {path}")
    if "timestamp" not in df.columns:
        raise MissingColumnError(f"{path}: no 'timestamp' column")
    if country_id not in df.columns:
        raise MissingColumnError(f"{path}: no column for country {country_id!r}")

    rows = []
    for raw_ts, raw_v in zip(df["timestamp"], df[country_id]):
        ts = parse_timestamp(str(raw_ts))
        try:
            v = float(raw_v)
        except (TypeError, ValueError) as exc:
            raise OutOfRangeError(f"{path}: bad capacity factor {raw_v!r} at {ts}") from exc
        if not (0.0 <= v <= 1.0) or not math.isfinite(v):
            raise OutOfRangeError(f"{path}: capacity factor {v} at {ts} outside [0, 1]")
        rows.append((ts, v))
    rows.sort(key=lambda r: r[0])
    _check_strictly_increasing([r[0] for r in rows], str(path))
    return GenerationSeries(country_id=country_id, rows=rows)


def parse_weather_csv(path: str | Path, location_id: str = "") -> WeatherSeries:
    """Read hourly weather rows, keeping numeric columns and dropping string-typed ones."""
    path = Path(path)
    if not path.exists():
        raise EmptyFileError(f"weather file not found: {path}")
    df = pd.read_csv(path, dtype=str)
    if "timestamp" not in df.columns:
        raise MissingColumnError(f"{path}: no 'timestamp' column")
    if len(df) == 0:
        raise EmptyFileError(f"weather file has no data rows: {path}")

    numeric_names = []
    columns = []
    for name in df.columns:
        if name == "timestamp":
            continue
        if name in STRING_FEATURES:
            log.info("dropping string-typed weather feature %r from %s", name, path)
            continue
        raw = df[name]
        parsed = np.empty(len(raw))
        ok = True
        for i, cell in enumerate(raw):
            if cell is None or (isinstance(cell, float) and math.isnan(cell)) or str(cell).strip() == "":
                parsed[i] = np.nan
            else:
                try:
                    parsed[i] = float(cell)
                except ValueError:
                    ok = False
                    break
        # A column with unparseable non-blank cells is treated as string-typed.
        if not ok:
            log.info("dropping non-numeric weather feature %r from %s", name, path)
            continue
        numeric_names.append(name)
        columns.append(parsed)

    stamps = [parse_timestamp(str(raw)) for raw in df["timestamp"]]
    values = np.column_stack(columns) if columns else np.zeros((len(df), 0))
    order = np.argsort(np.array(stamps))
    stamps = [stamps[i] for i in order]
    values = values[order]
    _check_strictly_increasing(stamps, str(path))
    rows = [(ts, values[i]) for i, ts in enumerate(stamps)]
    return WeatherSeries(location_id=location_id or path.stem, feature_names=numeric_names, rows=rows)


def merge_hourly(
    gen: GenerationSeries,
    weather: WeatherSeries,
    impute: ImputePolicy = ImputePolicy(),
) -> list[AlignedSample]:
    """Join the two series on their common hourly timestamps.

    Missing weather cells are forward-filled from the most recent value at
    most impute.max_gap_hours old; rows with unresolved gaps are dropped.
    """
    if not gen.rows or not weather.rows:
        raise EmptyIntersectionError("cannot merge an empty series")

    n_feat = len(weather.feature_names)
    filled = np.array([vals for _, vals in weather.rows], dtype=np.float64)
    stamps = [ts for ts, _ in weather.rows]
    last_seen_at: list[datetime | None] = [None] * n_feat
    last_value = np.full(n_feat, np.nan)
    keep = np.ones(len(stamps), dtype=bool)
    max_gap = timedelta(hours=impute.max_gap_hours)
    for i, ts in enumerate(stamps):
        row = filled[i]
        for j in range(n_feat):
            if np.isnan(row[j]):
                if last_seen_at[j] is not None and ts - last_seen_at[j] <= max_gap:
                    row[j] = last_value[j]
                else:
                    keep[i] = False
            else:
                last_seen_at[j] = ts
                last_value[j] = row[j]

    gen_map = dict(gen.rows)
    out = []
    for i, ts in enumerate(stamps):
        if keep[i] and ts in gen_map:
            out.append(AlignedSample(timestamp=ts, features=filled[i].copy(),
                                     capacity_factor=gen_map[ts]))
    if not out:
        raise EmptyIntersectionError(
            f"no common usable hours between {gen.country_id} and {weather.location_id}")
    return out


# ---------------------------------------------------------------------------
# Synthetic domains

# The six signal-carrying features come first, named after real weather fields;
# the remainder are pure noise channels.
CAUSAL_FEATURE_NAMES = ["temp", "dew", "snow", "snowdepth", "windspeed", "cloudcover"]
CAUSAL_FEATURE_INDICES = tuple(range(6))
WINDSPEED_INDEX = CAUSAL_FEATURE_NAMES.index("windspeed")

# Base mean/sd for the six causal channels and how strongly each tracks the
# latent wind state (windspeed tracks it exactly).
_CAUSAL_MU = np.array([10.0, 6.0, 0.5, 1.0, 8.0, 50.0])
_CAUSAL_SD = np.array([6.0, 5.0, 0.8, 1.5, 3.0, 25.0])
_CAUSAL_RHO = np.array([0.65, 0.6, 0.55, 0.6, 1.0, 0.7])
# Per-feature mean displacement applied per unit of cfg.shift.
_CAUSAL_DMU = np.array([4.5, 3.75, 0.6, 1.2, 3.0, -18.0])


def synth_feature_names(n_features: int) -> list[str]:
    return CAUSAL_FEATURE_NAMES + [f"noise{i:02d}" for i in range(n_features - 6)]


def power_curve(windspeed: np.ndarray | float, cut_in: float, rated: float) -> np.ndarray:
    """Logistic wind-to-power map: exactly 0 at or below cut_in, ~1 far above rated."""
    v = np.asarray(windspeed, dtype=np.float64)
    mid = 0.5 * (cut_in + rated)
    steep = 8.0 / (rated - cut_in)
    out = 1.0 / (1.0 + np.exp(-steep * (v - mid)))
    return np.where(v <= cut_in, 0.0, out)


def synth_domain(cfg: SynthConfig) -> list[AlignedSample]:
    """Draw a synthetic hourly domain with a known 6-feature ground truth.

    A latent wind state drives the six causal channels (windspeed exactly);
    capacity factor is the clamped power curve of windspeed plus noise.
    cfg.shift displaces every feature mean, producing the domain gap.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_hours
    latent = rng.standard_normal(n)

    feats = np.empty((n, cfg.n_features))
    for j in range(6):
        eps = rng.standard_normal(n)
        z = _CAUSAL_RHO[j] * latent + math.sqrt(1.0 - _CAUSAL_RHO[j] ** 2) * eps
        feats[:, j] = _CAUSAL_MU[j] + cfg.shift * _CAUSAL_DMU[j] + _CAUSAL_SD[j] * z
    for j in range(6, cfg.n_features):
        mu = 5.0 + 1.5 * (j - 6) + cfg.shift * (1.0 + 0.3 * (j - 6))
        feats[:, j] = mu + 2.0 * rng.standard_normal(n)

    cf = power_curve(feats[:, WINDSPEED_INDEX], cfg.cut_in, cfg.rated)
    cf = cf + cfg.noise_sd * rng.standard_normal(n)
    cf = np.clip(cf, 0.0, 1.0)

    t0 = datetime(2015, 1, 1, 0, 0)
    return [
        AlignedSample(timestamp=t0 + i * HOUR, features=feats[i].copy(),
                      capacity_factor=float(cf[i]))
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# CSV writers (round-trip through the parsers above)

def write_generation_csv(path: str | Path, series: GenerationSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", series.country_id])
        for ts, v in series.rows:
            w.writerow([ts.strftime(TS_FMT), repr(v)])


def write_weather_csv(path: str | Path, series: WeatherSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp"] + series.feature_names)
        for ts, vals in series.rows:
            w.writerow([ts.strftime(TS_FMT)] + ["" if np.isnan(v) else repr(float(v)) for v in vals])


def samples_to_series(
    samples: list[AlignedSample], feature_names: list[str], name: str
) -> tuple[GenerationSeries, WeatherSeries]:
    """Split aligned samples back into the two source CSV shapes."""
    gen = GenerationSeries(country_id=name,
                           rows=[(s.timestamp, s.capacity_factor) for s in samples])
    wx = WeatherSeries(location_id=name, feature_names=list(feature_names),
                       rows=[(s.timestamp, s.features) for s in samples])
    return gen, wx


def write_aligned_csv(path: str | Path, samples: list[AlignedSample], feature_names: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp"] + feature_names + ["capacity_factor"])
        for s in samples:
            w.writerow([s.timestamp.strftime(TS_FMT)]
                       + [repr(float(v)) for v in s.features]
                       + [repr(float(s.capacity_factor))])


def read_aligned_csv(path: str | Path) -> tuple[list[AlignedSample], list[str]]:
    path = Path(path)
    if not path.exists():
        raise EmptyFileError(f"aligned file not found: {path}")
    df = pd.read_csv(path, float_precision="round_trip")
    if "timestamp" not in df.columns or "capacity_factor" not in df.columns:
        raise MissingColumnError(f"{path}: not an aligned-samples file")
    names = [c for c in df.columns if c not in ("timestamp", "capacity_factor")]
    vals = df[names].to_numpy(dtype=np.float64)
    out = []
    for i, (raw_ts, cf) in enumerate(zip(df["timestamp"], df["capacity_factor"])):
        out.append(AlignedSample(timestamp=parse_timestamp(str(raw_ts)),
                                 features=vals[i], capacity_factor=float(cf)))
    return out, names
