"""Aligned per-series, per-segment predictions of several forecasters plus ground truth."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import AlignmentMismatch, MissingPredictions, UnknownSeries
from ..ingest import SEGMENTS, WindowedSet

PREDICTION_HEADER = ["series", "segment", "origin_index", "value"]


@dataclass
class SegmentPredictions:
    origin: np.ndarray
    truth: np.ndarray
    preds: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.truth.size

    def __getitem__(self, tag: str) -> np.ndarray:
        try:
            return self.preds[tag]
        except KeyError:
            raise MissingPredictions(f"no predictions for model {tag!r}") from None


class PredictionTable:
    """Predictions keyed by ``(series, segment)``.

    Entry ``i`` of every vector belongs to target index ``origin[i]``; the
    origins come from the :class:`WindowedSet` the segment was registered with.
    """

    def __init__(self):
        self.entries: dict[tuple[str, str], SegmentPredictions] = {}
        self.provenance: dict[str, str] = {}

    def add_segment(self, series: str, segment: str, windows: WindowedSet) -> SegmentPredictions:
        entry = SegmentPredictions(
            np.asarray(windows.origin_indices, dtype=np.int64).copy(),
            np.asarray(windows.targets, dtype=np.float64).copy(),
        )
        self.entries[(series, segment)] = entry
        return entry

    def register(self, tag: str, series: str, segment: str, values, provenance: str = "trained_here"):
        entry = self.get(series, segment)
        values = np.asarray(values, dtype=np.float64)
        if values.shape != entry.truth.shape:
            raise AlignmentMismatch(
                f"{tag} predictions for {series}/{segment} have {values.size} entries, "
                f"expected {entry.truth.size}"
            )
        entry.preds[tag] = values
        prior = self.provenance.setdefault(tag, provenance)
        if prior != provenance:
            self.provenance[tag] = "mixed"

    def get(self, series: str, segment: str) -> SegmentPredictions:
        try:
            return self.entries[(series, segment)]
        except KeyError:
            raise UnknownSeries(f"no {segment!r} segment registered for series {series!r}") from None

    def has(self, series: str, segment: str) -> bool:
        return (series, segment) in self.entries

    @property
    def series_names(self) -> list[str]:
        seen: dict[str, None] = {}
        for name, _ in self.entries:
            seen.setdefault(name)
        return list(seen)

    @property
    def model_tags(self) -> list[str]:
        return list(self.provenance)

    # ------------------------------------------------------------------ csv io

    def to_csv(self, tag: str) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(PREDICTION_HEADER)
        for (series, segment), entry in self.entries.items():
            if tag == "truth":
                values = entry.truth
            elif tag in entry.preds:
                values = entry.preds[tag]
            else:
                continue
            for origin, value in zip(entry.origin, values):
                writer.writerow([series, segment, int(origin), repr(float(value))])
        return out.getvalue()

    def save(self, directory: Path) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for tag in ["truth", *self.model_tags]:
            path = directory / f"{tag}.csv"
            path.write_text(self.to_csv(tag))
            written.append(path)
        prov = directory / "provenance.csv"
        prov.write_text("model,provenance\n" + "".join(f"{k},{v}\n" for k, v in self.provenance.items()))
        written.append(prov)
        return written

    @classmethod
    def load(cls, directory: Path) -> "PredictionTable":
        directory = Path(directory)
        table = cls()
        for series, segment, origins, values in _group_rows((directory / "truth.csv").read_text()):
            table.entries[(series, segment)] = SegmentPredictions(origins, values)
        rows = list(csv.DictReader(io.StringIO((directory / "provenance.csv").read_text())))
        for row in rows:
            text = (directory / f"{row['model']}.csv").read_text()
            for series, segment, origins, values in _group_rows(text):
                entry = table.get(series, segment)
                if not np.array_equal(entry.origin, origins):
                    raise AlignmentMismatch(f"{row['model']}: origins differ for {series}/{segment}")
                entry.preds[row["model"]] = values
            table.provenance[row["model"]] = row["provenance"]
        return table


def _read_rows(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != PREDICTION_HEADER:
        raise AlignmentMismatch(f"prediction file header must be {','.join(PREDICTION_HEADER)}")
    return list(reader)


def _group_rows(text: str):
    grouped: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for row in _read_rows(text):
        grouped.setdefault((row["series"], row["segment"]), []).append(
            (int(row["origin_index"]), float(row["value"]))
        )
    for (series, segment), pairs in grouped.items():
        pairs.sort()
        yield (
            series,
            segment,
            np.array([p[0] for p in pairs], dtype=np.int64),
            np.array([p[1] for p in pairs], dtype=np.float64),
        )


def import_predictions(
    table: PredictionTable,
    text: str | bytes,
    model_tag: str,
    segments: tuple[str, ...] | None = None,
) -> None:
    """Register externally produced predictions for ``model_tag``.

    Every registered ``(series, segment)`` in ``segments`` must be covered by
    exactly its origin indices; rows are matched by key, not by position.
    Rows for the ``train`` segment are optional.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    segments = tuple(SEGMENTS if segments is None else segments)
    known = set(table.series_names)
    found: dict[tuple[str, str], tuple[np.ndarray, np.ndarray]] = {}
    for series, segment, origins, values in _group_rows(text):
        if series not in known:
            raise UnknownSeries(f"prediction file mentions unknown series {series!r}")
        if segment not in segments:
            continue
        if np.unique(origins).size != origins.size:
            raise AlignmentMismatch(f"duplicate origin indices for {series}/{segment}")
        found[(series, segment)] = (origins, values)

    accepted = []
    for (series, segment), entry in table.entries.items():
        if segment not in segments:
            continue
        if (series, segment) not in found:
            if segment == "train":
                continue
            raise AlignmentMismatch(f"no {model_tag} predictions for {series}/{segment}")
        origins, values = found.pop((series, segment))
        if not np.array_equal(origins, entry.origin):
            missing = np.setdiff1d(entry.origin, origins)
            extra = np.setdiff1d(origins, entry.origin)
            raise AlignmentMismatch(
                f"{series}/{segment}: {missing.size} missing and {extra.size} unexpected origin indices"
            )
        accepted.append((series, segment, values))
    if found:
        series, segment = next(iter(found))
        raise AlignmentMismatch(f"predictions for unregistered segment {series}/{segment}")

    for series, segment, values in accepted:
        table.register(model_tag, series, segment, values, provenance="imported")
