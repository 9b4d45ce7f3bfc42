"""Reading tick files and writing spot paths, reports and Monte Carlo samples."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataError
from .spectrum import TickSeries
from .spot import SpotPath
from .trigkernels import ObservationGrid

TICK_HEADER = ("asset_id", "timestamp", "price")


def parse_ticks(path, T: Optional[float] = None, assets=None) -> list[TickSeries]:
    """Read a ``asset_id,timestamp,price`` CSV into one TickSeries per asset.

    Timestamps are seconds from the window start and must increase strictly
    within each asset; log-prices are taken on ingest. ``T`` defaults to the
    largest timestamp in the file. ``assets`` optionally selects and orders
    asset ids. Assets appear in order of first occurrence otherwise.
    """
    rows = defaultdict(list)
    last = {}
    order = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if tuple(h.strip().lower() for h in header) != TICK_HEADER:
            raise DataError(f"{path}:1: expected header {','.join(TICK_HEADER)}, got {','.join(header)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(rec)}")
            aid = rec[0].strip()
            try:
                ts = float(rec[1])
                px = float(rec[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric timestamp or price") from None
            if not (math.isfinite(ts) and math.isfinite(px)):
                raise DataError(f"{path}:{lineno}: non-finite timestamp or price")
            if px <= 0:
                raise DataError(f"{path}:{lineno}: non-positive price {px} for asset {aid}")
            if ts < 0:
                raise DataError(f"{path}:{lineno}: negative timestamp {ts}")
            if aid in last:
                if ts == last[aid]:
                    raise DataError(f"{path}:{lineno}: duplicate timestamp {ts} for asset {aid}")
                if ts < last[aid]:
                    raise DataError(f"{path}:{lineno}: timestamp {ts} goes backwards for asset {aid}")
            else:
                order.append(aid)
            last[aid] = ts
            rows[aid].append((ts, px))

    if assets is not None:
        missing = [a for a in assets if a not in rows]
        if missing:
            raise DataError(f"{path}: no observations for asset(s) {', '.join(missing)}")
        order = list(assets)
    if not order:
        raise DataError(f"{path}: no observations")
    if T is None:
        T = max(last[a] for a in order)
    out = []
    for aid in order:
        data = np.array(rows[aid])
        keep = data[:, 0] <= T * (1 + 1e-12)
        data = data[keep]
        if data.shape[0] < 2:
            raise DataError(f"{path}: asset {aid} has fewer than two observations in [0, {T}]")
        out.append(TickSeries(aid, ObservationGrid(data[:, 0], T), np.log(data[:, 1])))
    return out


def write_ticks(path, ticks, prices: bool = True):
    """Inverse of :func:`parse_ticks` (prices are ``exp`` of the log-prices)."""
    rows = []
    for ts in ticks:
        vals = np.exp(ts.log_prices) if prices else ts.log_prices
        rows.extend((ts.asset_id, t, v) for t, v in zip(ts.grid.times, vals))
    rows.sort(key=lambda r: r[1])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TICK_HEADER)
        for aid, t, v in rows:
            w.writerow((aid, repr(float(t)), repr(float(v))))


def spot_columns(d: int) -> list[str]:
    return [f"c_{j + 1}{k + 1}" for j in range(d) for k in range(j, d)]


def write_spot_path(path, spot: SpotPath):
    """CSV with ``t`` and the upper triangle ``c_jk`` (``j <= k``) of each matrix."""
    d = spot.d
    iu = np.triu_indices(d)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + spot_columns(d))
        for t, C in zip(spot.t_grid, spot.values):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in C[iu]])


def read_spot_path(path, T: float) -> SpotPath:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(x) for x in rec] for rec in reader if rec])
    m = len(header) - 1
    d = int(round((math.sqrt(8 * m + 1) - 1) / 2))
    if d * (d + 1) // 2 != m:
        raise DataError(f"{path}: {m} value columns is not an upper triangle")
    vals = np.zeros((data.shape[0], d, d))
    iu = np.triu_indices(d)
    vals[:, iu[0], iu[1]] = data[:, 1:]
    vals[:, iu[1], iu[0]] = data[:, 1:]
    return SpotPath(T=T, B=data.shape[0], values=vals)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps_json(obj))


def write_samples(path, samples: dict):
    """Long-format CSV ``functional,replication,z`` of studentised statistics."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["functional", "replication", "z"])
        for fid in sorted(samples):
            for rep, z in sorted(samples[fid]):
                w.writerow([fid, rep, repr(float(z))])
