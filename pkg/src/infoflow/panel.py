"""Price CSV ingestion and alignment on common trading days.

Input files have a ``date,close`` header, ISO-8601 dates and decimal closes.
Closes are assumed already cleaned for splits and dividends.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from infoflow.errors import AlignmentError, IngestError, InsufficientDataError, NonPositivePriceError
from infoflow.returns import PriceSeries, ReturnSeries, log_returns

log = logging.getLogger(__name__)

__all__ = ["AlignedPanel", "ingest_csv", "expand_inputs", "align_panel", "write_price_csv"]


@dataclass(frozen=True, eq=False)
class AlignedPanel:
    dates: np.ndarray
    index: ReturnSeries
    stocks: list
    dropped_instruments: list = field(default_factory=list)
    dropped_dates: list = field(default_factory=list)

    def __len__(self):
        return self.dates.shape[0]


def ingest_csv(path, instrument_id: str | None = None) -> PriceSeries:
    path = Path(path)
    instrument_id = instrument_id or path.stem
    if not path.is_file():
        raise IngestError(f"{path}: no such file")
    dates, closes, seen = [], [], {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["date", "close"]:
            raise IngestError(f"{path}:1: expected header 'date,close', got {header!r}")
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise IngestError(f"{path}:{lineno}: expected 2 fields, got {row!r}")
            try:
                date = np.datetime64(row[0].strip(), "D")
                close = float(row[1])
            except ValueError as exc:
                raise IngestError(f"{path}:{lineno}: malformed row {row!r} ({exc})") from None
            if np.isnat(date) or not math.isfinite(close):
                raise IngestError(f"{path}:{lineno}: malformed row {row!r}")
            if not close > 0:
                raise NonPositivePriceError(date, close)
            if date in seen:
                raise IngestError(f"{path}:{lineno}: duplicate date {date} (first on line {seen[date]})")
            seen[date] = lineno
            dates.append(date)
            closes.append(close)

    dates = np.array(dates, dtype="datetime64[D]")
    closes = np.array(closes)
    order = np.argsort(dates, kind="stable")
    if np.any(order != np.arange(order.shape[0])):
        log.warning("%s: rows not in date order; sorted", path)
        dates, closes = dates[order], closes[order]
    return PriceSeries(instrument_id, dates, closes)


def expand_inputs(paths) -> list[Path]:
    """Files as given; directories contribute their ``*.csv`` in name order."""
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(p.glob("*.csv")))
        else:
            out.append(p)
    return out


def ingest_all(paths, workers: int | None = None) -> list[PriceSeries]:
    paths = expand_inputs(paths)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            series = list(pool.map(ingest_csv, paths))
    else:
        series = [ingest_csv(p) for p in paths]
    ids = [s.instrument_id for s in series]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise IngestError(f"instrument ids appear in more than one file: {dupes}")
    return series


def align_panel(all_series: list[PriceSeries], index_id: str, min_returns: int = 3) -> AlignedPanel:
    """Restrict every instrument to the common trading days, then take returns.

    Instruments with fewer than ``min_returns + 1`` prices are dropped before
    intersecting so one short file cannot erase the panel.  Every dropped
    instrument and date is logged and recorded on the result.
    """
    by_id = {s.instrument_id: s for s in all_series}
    if index_id not in by_id:
        raise AlignmentError(f"index {index_id!r} not among instruments {sorted(by_id)}")
    if len(by_id) < 2:
        raise AlignmentError("need the index and at least one stock")

    dropped = []
    kept = []
    for s in all_series:
        if len(s) < min_returns + 1:
            if s.instrument_id == index_id:
                raise InsufficientDataError(f"index {index_id!r} has only {len(s)} prices")
            log.warning("dropping %s: %d prices, need %d", s.instrument_id, len(s), min_returns + 1)
            dropped.append(s.instrument_id)
        else:
            kept.append(s)
    if len(kept) < 2:
        raise AlignmentError("no stocks left after dropping short series")

    common = kept[0].dates
    for s in kept[1:]:
        common = np.intersect1d(common, s.dates, assume_unique=True)
    if common.size == 0:
        raise AlignmentError("instruments share no trading days")
    if common.size < min_returns + 1:
        raise InsufficientDataError(
            f"only {common.size} common trading days, need {min_returns + 1}"
        )
    all_dates = np.unique(np.concatenate([s.dates for s in kept]))
    lost = np.setdiff1d(all_dates, common, assume_unique=True)
    if lost.size:
        date_sets = {s.instrument_id: set(s.dates.tolist()) for s in kept}
        for d in lost:
            missing = [i for i, ds in date_sets.items() if d.item() not in ds]
            log.warning("dropping date %s (missing from %s)", d, ", ".join(missing))

    returns = {}
    for s in kept:
        mask = np.isin(s.dates, common, assume_unique=True)
        returns[s.instrument_id] = log_returns(PriceSeries(s.instrument_id, s.dates[mask], s.closes[mask]))
    index = returns.pop(index_id)
    stocks = [returns[s.instrument_id] for s in kept if s.instrument_id in returns]
    return AlignedPanel(index.dates, index, stocks, dropped, [str(d) for d in lost])


def write_price_csv(path, series: PriceSeries):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "close"])
        for d, c in zip(series.dates, series.closes):
            w.writerow([str(d), repr(float(c))])
