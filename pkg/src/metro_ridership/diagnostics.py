"""Influence diagnostics and the transportation-hub dummy."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, NumericalError
from .features import FeatureMatrix
from .regress import OlsFit

HUB_COLUMN = "Trans_hub"

# hat values this close to 1 are treated as exactly 1 (QR rounding can land either side)
LEVERAGE_ONE_TOL = 1e-10


@dataclass(frozen=True)
class Thresholds:
    """Flagging rules, each relative to the fit size.

    A row is flagged when ``D_i > cooks_factor / n``, ``|t_i| > studentized``
    or ``h_ii > leverage_factor * (k + 1) / n``. Set any of them to
    ``math.inf`` to disable that rule.
    """

    cooks_factor: float = 4.0
    studentized: float = 2.0
    leverage_factor: float = 2.0


@dataclass(frozen=True)
class InfluenceRow:
    station_id: str
    leverage: float
    student_internal: float
    student_external: float
    cooks_distance: float
    flagged: bool = False
    reasons: tuple[str, ...] = ()


@dataclass(frozen=True)
class InfluenceReport:
    n: int
    k: int
    rows: tuple[InfluenceRow, ...]
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def flagged(self) -> tuple[InfluenceRow, ...]:
        return tuple(r for r in self.rows if r.flagged)


def influence_measures(fit: OlsFit, station_ids=None) -> InfluenceReport:
    """Leverage, studentized residuals and Cook's distance for every row.

    A row with leverage 1 (to within ``LEVERAGE_ONE_TOL``) gets an infinite Cook's distance and the
    reason ``leverage_one``; its studentized residuals are NaN.
    """
    n, k = fit.n, fit.k
    p = k + 1
    df = n - p
    if df < 2:
        raise NumericalError(f"influence measures need n - k - 1 >= 2, got {df}")
    if station_ids is None:
        station_ids = [str(i + 1) for i in range(n)]
    station_ids = list(station_ids)
    if len(station_ids) != n:
        raise ValueError(f"{len(station_ids)} station ids for {n} observations")

    rows = []
    for sid, h, e in zip(station_ids, fit.hat, fit.residuals):
        h = float(h)
        if h >= 1.0 - LEVERAGE_ONE_TOL:
            rows.append(InfluenceRow(sid, 1.0, math.nan, math.nan, math.inf, True, ("leverage_one",)))
            continue
        if fit.sigma > 0:
            r = float(e) / (fit.sigma * math.sqrt(1.0 - h))
        else:
            r = 0.0
        denom = df - r * r
        t = r * math.sqrt((df - 1) / denom) if denom > 0 else math.copysign(math.inf, r)
        d = r * r * h / (p * (1.0 - h))
        rows.append(InfluenceRow(sid, h, r, t, d))
    return InfluenceReport(n, k, tuple(rows))


def flag_influential(report: InfluenceReport, thresholds: Thresholds = Thresholds()) -> InfluenceReport:
    """Return a copy of ``report`` with rows flagged under ``thresholds``."""
    n, p = report.n, report.k + 1
    d_cut = thresholds.cooks_factor / n
    h_cut = thresholds.leverage_factor * p / n
    out = []
    for r in report.rows:
        reasons = [x for x in r.reasons if x == "leverage_one"]
        if r.cooks_distance > d_cut and "leverage_one" not in reasons:
            reasons.append("cooks_distance")
        if abs(r.student_external) > thresholds.studentized:
            reasons.append("studentized_residual")
        if r.leverage > h_cut and "leverage_one" not in reasons:
            reasons.append("leverage")
        out.append(
            InfluenceRow(
                r.station_id, r.leverage, r.student_internal, r.student_external,
                r.cooks_distance, bool(reasons), tuple(reasons),
            )
        )
    return InfluenceReport(report.n, report.k, tuple(out), thresholds)


def influence_plot_data(report: InfluenceReport) -> list[dict]:
    """Rows for an influence plot: leverage (x), studentized residual (y), Cook's distance (size)."""
    return [
        {
            "station_id": r.station_id,
            "leverage": r.leverage,
            "studentized_residual": r.student_external,
            "cooks_distance": r.cooks_distance,
            "flag": int(r.flagged),
        }
        for r in report.rows
    ]


def write_influence_csv(report: InfluenceReport, path) -> None:
    cols = ("station_id", "leverage", "studentized_residual", "cooks_distance", "flag")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in influence_plot_data(report):
            w.writerow([row["station_id"], *[repr(float(row[c])) for c in cols[1:4]], row["flag"]])


def add_hub_dummy(matrix: FeatureMatrix, hub_ids) -> FeatureMatrix:
    """Set ``Trans_hub`` to 1 for ``hub_ids`` and 0 elsewhere (added if absent)."""
    hub_ids = set(hub_ids)
    unknown = hub_ids - set(matrix.station_ids)
    if unknown:
        raise DataError(f"hub ids not in feature matrix: {sorted(unknown)}")
    col = [1.0 if sid in hub_ids else 0.0 for sid in matrix.station_ids]
    return matrix.with_column(HUB_COLUMN, col)
