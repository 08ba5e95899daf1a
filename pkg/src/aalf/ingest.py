"""Reading, validating, splitting and windowing univariate series.

Two on-disk formats are understood: a subset of the Monash ``.tsf`` archive
format and plain CSV in either long or wide layout.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .errors import (
    EmptyFile,
    InsufficientHistory,
    MalformedRow,
    MissingDataSection,
    MissingValue,
    NonNumericValue,
    TooShort,
    UnknownFrequency,
    ZeroVariance,
)

KNOWN_FREQUENCIES = ("half_hourly", "hourly", "daily")

_DEFAULT_LAGS = {"half_hourly": 48, "daily": 14, "hourly": 24}

# common spellings found in Monash headers and hand-written configs
_FREQUENCY_ALIASES = {
    "half_hourly": "half_hourly",
    "30_minutes": "half_hourly",
    "30min": "half_hourly",
    "30m": "half_hourly",
    "hourly": "hourly",
    "1h": "hourly",
    "daily": "daily",
    "1d": "daily",
}

Segment = Literal["train", "val", "test"]
SEGMENTS: tuple[str, ...] = ("train", "val", "test")
MIN_LENGTH = 10


def normalize_frequency(token: str | None) -> str:
    """Map a frequency token onto a known name; unknown tokens pass through."""
    if token is None:
        return "other"
    key = token.strip().lower()
    return _FREQUENCY_ALIASES.get(key, key)


@dataclass(eq=False)
class TimeSeries:
    name: str
    values: np.ndarray
    frequency: str = "other"
    start_timestamp: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError(f"series {self.name!r} must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(self.values)):
            raise MissingValue(f"series {self.name!r} contains missing or non-finite values")

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.name == other.name
            and self.frequency == other.frequency
            and self.start_timestamp == other.start_timestamp
            and np.array_equal(self.values, other.values)
        )


@dataclass
class Dataset:
    name: str
    series: list[TimeSeries]
    lag: int | None = None
    horizon: int = 1
    attributes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        names = [s.name for s in self.series]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate series names in dataset {self.name!r}: {dupes}")
        if self.lag is None and self.series:
            freq = self.series[0].frequency
            if freq in _DEFAULT_LAGS:
                self.lag = _DEFAULT_LAGS[freq]

    def __getitem__(self, name: str) -> TimeSeries:
        for s in self.series:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.series]


@dataclass(frozen=True)
class SplitBounds:
    train_end: int
    val_end: int
    total: int

    def bounds(self, segment: str) -> tuple[int, int]:
        if segment == "train":
            return 0, self.train_end
        if segment == "val":
            return self.train_end, self.val_end
        if segment == "test":
            return self.val_end, self.total
        raise ValueError(f"unknown segment {segment!r}")


@dataclass
class WindowedSet:
    inputs: np.ndarray
    targets: np.ndarray
    origin_indices: np.ndarray

    def __len__(self) -> int:
        return self.targets.size


def default_lag(frequency: str) -> int:
    """Number of lagged inputs used for a sampling frequency (one day, two weeks, one day)."""
    freq = normalize_frequency(frequency)
    try:
        return _DEFAULT_LAGS[freq]
    except KeyError:
        raise UnknownFrequency(
            f"no default lag for frequency {frequency!r}; set the lag explicitly"
        ) from None


# --------------------------------------------------------------------------- tsf

def _decode(text: bytes | str) -> str:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return text


def _parse_value(token: str, series_name: str) -> float:
    token = token.strip()
    if token == "?":
        raise MissingValue(f"series {series_name!r} has a missing value ('?')")
    try:
        return float(token)
    except ValueError:
        raise NonNumericValue(f"series {series_name!r}: cannot parse {token!r} as a number") from None


def parse_tsf(text: bytes | str, name: str | None = None) -> Dataset:
    """Parse the subset of the ``.tsf`` format used by the Monash archive.

    Records are ``name:start_timestamp:v1,v2,...``. When ``@attribute`` lines
    are present, each record carries one field per attribute followed by the
    values; otherwise exactly the three fields above are expected.
    """
    lines = _decode(text).splitlines()
    relation = name
    frequency = "other"
    horizon = 1
    attributes: list[tuple[str, str]] = []
    extra: dict[str, str] = {}
    data_start = None

    for i, raw in enumerate(lines):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not line.startswith("@"):
            raise MalformedRow(f"line {i + 1}: unexpected content before @data: {line[:40]!r}")
        key, _, rest = line[1:].partition(" ")
        key = key.lower()
        rest = rest.strip()
        if key == "data":
            data_start = i + 1
            break
        if key == "relation":
            relation = relation or rest
        elif key == "attribute":
            parts = rest.split()
            if len(parts) != 2:
                raise MalformedRow(f"line {i + 1}: bad @attribute declaration")
            attributes.append((parts[0], parts[1].lower()))
        elif key == "frequency":
            frequency = normalize_frequency(rest)
        elif key == "horizon":
            horizon = int(rest)
        else:
            # @missing, @equallength and anything unknown are kept but not interpreted
            extra[key] = rest

    if data_start is None:
        raise MissingDataSection("no @data line found")

    n_fields = len(attributes) + 1 if attributes else 3
    date_field = next(
        (j for j, (_, kind) in enumerate(attributes) if kind == "date"),
        None if attributes else 1,
    )
    series: list[TimeSeries] = []
    for i in range(data_start, len(lines)):
        line = lines[i].strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(":")
        if len(fields) < 3 or len(fields) != n_fields:
            raise MalformedRow(
                f"line {i + 1}: expected {n_fields} ':'-separated fields, got {len(fields)}"
            )
        sname = fields[0].strip()
        start = fields[date_field].strip() if date_field is not None else None
        values = [_parse_value(tok, sname) for tok in fields[-1].split(",")]
        if not values:
            raise MalformedRow(f"line {i + 1}: record has no values")
        series.append(TimeSeries(sname, np.array(values), frequency, start or None))

    return Dataset(relation or "dataset", series, horizon=horizon, attributes=extra)


def write_tsf(dataset: Dataset) -> str:
    """Serialize a dataset to ``.tsf`` text that :func:`parse_tsf` reads back exactly."""
    out = io.StringIO()
    out.write(f"@relation {dataset.name}\n")
    out.write("@attribute series_name string\n")
    out.write("@attribute start_timestamp date\n")
    freq = dataset.series[0].frequency if dataset.series else "other"
    out.write(f"@frequency {freq}\n")
    out.write(f"@horizon {dataset.horizon}\n")
    for key, value in dataset.attributes.items():
        out.write(f"@{key} {value}\n")
    out.write("@data\n")
    for s in dataset.series:
        values = ",".join(repr(float(v)) for v in s.values)
        out.write(f"{s.name}:{s.start_timestamp or ''}:{values}\n")
    return out.getvalue()


# --------------------------------------------------------------------------- csv

def parse_csv(
    text: bytes | str,
    layout: Literal["long", "wide"] = "long",
    name: str = "dataset",
    frequency: str = "other",
) -> Dataset:
    """Parse CSV with a header row.

    ``long``: two columns ``series,value``, rows in time order per series.
    ``wide``: one column per series; ragged columns may end in empty cells.
    """
    text = _decode(text)
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise EmptyFile("CSV has no data rows")
    header, body = rows[0], rows[1:]
    frequency = normalize_frequency(frequency)

    if layout == "long":
        collected: dict[str, list[float]] = {}
        for lineno, row in enumerate(body, start=2):
            if len(row) != 2:
                raise MalformedRow(f"line {lineno}: expected 2 columns, got {len(row)}")
            sname = row[0].strip()
            collected.setdefault(sname, []).append(_parse_value(row[1], sname))
        series = [TimeSeries(k, np.array(v), frequency) for k, v in collected.items()]
    elif layout == "wide":
        names = [h.strip() for h in header]
        columns: list[list[float]] = [[] for _ in names]
        ended = [False] * len(names)
        for lineno, row in enumerate(body, start=2):
            if len(row) > len(names):
                raise MalformedRow(f"line {lineno}: more cells than header columns")
            row = row + [""] * (len(names) - len(row))
            for j, cell in enumerate(row):
                if not cell.strip():
                    ended[j] = True
                    continue
                if ended[j]:
                    raise MissingValue(f"series {names[j]!r} has an interior empty cell")
                columns[j].append(_parse_value(cell, names[j]))
        series = [TimeSeries(n, np.array(c), frequency) for n, c in zip(names, columns) if c]
    else:
        raise ValueError(f"unknown CSV layout {layout!r}")

    if not series:
        raise EmptyFile("CSV contains no series")
    return Dataset(name, series)


# ----------------------------------------------------------------- split/filter

def split_series(series: TimeSeries | int, train_frac: float = 0.8, val_frac: float = 0.1) -> SplitBounds:
    """Split indices using floor(0.8 T) and floor(0.9 T)."""
    total = series if isinstance(series, int) else len(series)
    # rounding first keeps e.g. 0.9 * 10 from flooring to 8 on representation error
    train_end = math.floor(round(train_frac * total, 9))
    val_end = math.floor(round((train_frac + val_frac) * total, 9))
    if total < MIN_LENGTH or not 0 < train_end < val_end < total:
        raise TooShort(f"series of length {total} is too short to split into three segments")
    return SplitBounds(train_end, val_end, total)


def _is_constant(segment: np.ndarray) -> bool:
    return segment.size <= 1 or float(segment.max() - segment.min()) == 0.0


def filter_constant(
    dataset: Dataset, train_frac: float = 0.8, val_frac: float = 0.1
) -> tuple[Dataset, list[str]]:
    """Drop every series with a constant train, validation or test segment."""
    kept, discarded = [], []
    for s in dataset.series:
        split = split_series(s, train_frac, val_frac)
        if any(_is_constant(s.values[slice(*split.bounds(seg))]) for seg in SEGMENTS):
            discarded.append(s.name)
        else:
            kept.append(s)
    return replace(dataset, series=kept), discarded


def standardize(series: TimeSeries, split: SplitBounds) -> tuple[TimeSeries, float, float]:
    train = series.values[: split.train_end]
    mean = float(train.mean())
    std = float(train.std())
    if std == 0.0:
        raise ZeroVariance(f"series {series.name!r} has a constant training segment")
    return replace(series, values=(series.values - mean) / std), mean, std


def destandardize(values: np.ndarray, mean: float, std: float) -> np.ndarray:
    return np.asarray(values) * std + mean


# --------------------------------------------------------------------- windows

def _windows(values: np.ndarray, origins: np.ndarray, lag: int) -> WindowedSet:
    offsets = np.arange(-lag, 0)
    idx = origins[:, None] + offsets[None, :]
    return WindowedSet(values[idx], values[origins].copy(), origins)


def make_windows(
    series: TimeSeries | np.ndarray,
    lag: int,
    segment: str | None = None,
    split: SplitBounds | None = None,
) -> WindowedSet:
    """Lagged input windows with one-step-ahead targets.

    With ``segment=None`` the whole series is windowed. Otherwise targets are
    restricted to the segment while the lagged context may reach back into
    earlier segments.
    """
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    if lag < 1:
        raise ValueError("lag must be positive")
    if segment is None:
        start, stop = lag, values.size
        if start >= stop:
            raise InsufficientHistory(f"need more than {lag} values, have {values.size}")
    else:
        if split is None:
            split = split_series(values.size)
        start, stop = split.bounds(segment)
        if segment == "train":
            start = lag
            if start >= stop:
                raise InsufficientHistory(
                    f"training segment of length {stop} leaves no window for lag {lag}"
                )
        elif start < lag:
            raise InsufficientHistory(
                f"segment {segment!r} starts at {start}, before {lag} values of history"
            )
    return _windows(values, np.arange(start, stop), lag)
